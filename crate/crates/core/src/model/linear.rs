//! Logistic regression fitted by accelerated gradient descent.

use ndarray::{Array1, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use super::{check_training_data, sigmoid, softplus, Family, FittedParams, ModelSpec, TrainedClassifier, TrainingMeta};
use crate::error::Result;

pub const LOGISTIC_GRAD_TOL: f64 = 1e-6;
pub const LOGISTIC_MAX_ITER: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub intercept: f64,
    pub weights: Vec<f64>,
}

impl LinearModel {
    pub fn zeros(width: usize) -> Self {
        Self { intercept: 0.0, weights: vec![0.0; width] }
    }

    pub fn margins(&self, x: ArrayView2<f64>) -> Array1<f64> {
        x.dot(&ArrayView1::from(&self.weights[..])) + self.intercept
    }

    pub fn predict_proba(&self, x: ArrayView2<f64>) -> Vec<f64> {
        self.margins(x).iter().map(|&z| sigmoid(z)).collect()
    }
}

/// Mean negative log-likelihood and its gradient `(d/d intercept, d/d w)`.
pub fn log_loss_and_grad(x: ArrayView2<f64>, y: &[bool], model: &LinearModel) -> (f64, f64, Array1<f64>) {
    let n = x.nrows() as f64;
    let z = model.margins(x);
    let mut loss = 0.0;
    let mut resid = Array1::zeros(x.nrows());
    for (i, (&zi, &yi)) in z.iter().zip(y).enumerate() {
        let t = if yi { 1.0 } else { 0.0 };
        loss += softplus(zi) - t * zi;
        resid[i] = sigmoid(zi) - t;
    }
    let grad_w = x.t().dot(&resid) / n;
    (loss / n, resid.sum() / n, grad_w)
}

/// Upper estimate of the Lipschitz constant of the mean log-loss gradient:
/// `0.25 * lambda_max([1 X]^T [1 X] / n)`, by power iteration.
pub fn log_loss_lipschitz(x: ArrayView2<f64>) -> f64 {
    let n = x.nrows() as f64;
    let d = x.ncols();
    // v = (v0 for the intercept column, rest for x)
    let mut v0 = 1.0;
    let mut v = Array1::from_elem(d, 1.0);
    let mut lambda = 0.0;
    for _ in 0..100 {
        let xv = x.dot(&v) + v0;
        let new_v0 = xv.sum() / n;
        let new_v = x.t().dot(&xv) / n;
        let norm = (new_v0 * new_v0 + new_v.dot(&new_v)).sqrt();
        if norm == 0.0 {
            break;
        }
        let converged = (norm - lambda).abs() <= 1e-9 * norm;
        lambda = norm;
        v0 = new_v0 / norm;
        v = new_v / norm;
        if converged {
            break;
        }
    }
    // power iteration approaches from below
    0.25 * lambda * 1.05 + 1e-12
}

/// Unpenalized maximum likelihood. Stops when the gradient norm drops
/// below 1e-6 or after 10,000 iterations.
pub fn fit_logistic(x: ArrayView2<f64>, y: &[bool], seed: u64) -> Result<TrainedClassifier> {
    check_training_data(x, y, true)?;
    let lipschitz = log_loss_lipschitz(x);
    let step = 1.0 / lipschitz;
    let d = x.ncols();

    let mut theta = LinearModel::zeros(d);
    let mut prev = theta.clone();
    let mut momentum_t = 1.0f64;
    let mut prev_loss = f64::INFINITY;
    let mut iterations = 0;
    let mut stop_reason = "max_iterations".to_string();

    for it in 0..LOGISTIC_MAX_ITER {
        iterations = it + 1;
        // look-ahead point
        let t_next = (1.0 + (1.0 + 4.0 * momentum_t * momentum_t).sqrt()) / 2.0;
        let beta = (momentum_t - 1.0) / t_next;
        let look = LinearModel {
            intercept: theta.intercept + beta * (theta.intercept - prev.intercept),
            weights: theta.weights.iter().zip(&prev.weights).map(|(w, p)| w + beta * (w - p)).collect(),
        };
        let (_, gb, gw) = log_loss_and_grad(x, y, &look);
        let gnorm = (gb * gb + gw.dot(&gw)).sqrt();
        if gnorm < LOGISTIC_GRAD_TOL {
            theta = look;
            stop_reason = "gradient_tolerance".into();
            break;
        }
        let next = LinearModel {
            intercept: look.intercept - step * gb,
            weights: look.weights.iter().zip(gw.iter()).map(|(w, g)| w - step * g).collect(),
        };
        let (loss, _, _) = log_loss_and_grad(x, y, &next);
        prev = std::mem::replace(&mut theta, next);
        momentum_t = t_next;
        // restart momentum when the objective goes up
        if loss > prev_loss {
            momentum_t = 1.0;
            prev = theta.clone();
        }
        prev_loss = loss;
    }

    let (_, gb, gw) = log_loss_and_grad(x, y, &theta);
    if stop_reason != "gradient_tolerance" && (gb * gb + gw.dot(&gw)).sqrt() < LOGISTIC_GRAD_TOL {
        stop_reason = "gradient_tolerance".into();
    }
    Ok(TrainedClassifier {
        family: Family::Logistic,
        spec: ModelSpec::Logistic,
        width: d,
        layout_fingerprint: None,
        seed,
        meta: TrainingMeta { iterations, stop_reason, lipschitz: Some(lipschitz), ..Default::default() },
        params: FittedParams::Linear(theta),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Predictor;
    use ndarray::{array, Array2};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn separable_1d() {
        let x = array![[-3.0], [-2.0], [-1.0], [1.0], [2.0], [3.0]];
        let y = [false, false, false, true, true, true];
        let m = fit_logistic(x.view(), &y, 0).unwrap();
        let p = m.predict_proba(x.view()).unwrap();
        assert!(p.iter().zip(&y).all(|(&p, &t)| (p >= 0.5) == t));
    }

    #[test]
    fn permuted_labels_predict_prevalence() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 2000;
        let x = Array2::from_shape_fn((n, 3), |_| rng.random_range(-1.0..1.0));
        let y: Vec<bool> = (0..n).map(|_| rng.random_bool(0.3)).collect();
        let prevalence = y.iter().filter(|&&b| b).count() as f64 / n as f64;
        let m = fit_logistic(x.view(), &y, 0).unwrap();
        let FittedParams::Linear(lin) = &m.params else { unreachable!() };
        assert!(lin.weights.iter().all(|w| w.abs() < 0.2), "{:?}", lin.weights);
        let p = m.predict_proba(x.view()).unwrap();
        assert!(p.iter().all(|&p| (p - prevalence).abs() < 0.05));
    }

    #[test]
    fn two_point_boundary() {
        // Points at x = 1 (negative) and x = 3 (positive) with an overlap
        // point at each location so the MLE is finite: the fitted boundary
        // is the midpoint x = 2, so logit(1.5) < 0 < logit(2.5).
        let x = array![[1.0], [1.0], [1.0], [3.0], [3.0], [3.0]];
        let y = [false, false, true, true, true, false];
        let m = fit_logistic(x.view(), &y, 0).unwrap();
        let FittedParams::Linear(lin) = &m.params else { unreachable!() };
        // MLE: p(1) = 1/3, p(3) = 2/3 -> w = ln 2, b = -2 ln 2.
        // Smallest Hessian eigenvalue is (2/9)(3 - 2 sqrt 2), so a gradient
        // norm of 1e-6 leaves at most ~2.6e-5 parameter error.
        assert!((lin.weights[0] - 2f64.ln()).abs() < 5e-5, "{lin:?}");
        assert!((lin.intercept + 2.0 * 2f64.ln()).abs() < 5e-5, "{lin:?}");
        let probe = array![[1.5], [2.5]];
        let p = m.predict_proba(probe.view()).unwrap();
        assert!(p[0] < 0.5 && p[1] > 0.5);
        assert_eq!(m.meta.stop_reason, "gradient_tolerance");
    }

    #[test]
    fn zero_weights_give_half() {
        let lin = LinearModel::zeros(4);
        let x = Array2::from_elem((3, 4), 2.5);
        assert_eq!(lin.predict_proba(x.view()), vec![0.5; 3]);
    }

    #[test]
    fn single_class_rejected() {
        let x = array![[1.0], [2.0]];
        assert!(matches!(fit_logistic(x.view(), &[true, true], 0), Err(crate::Error::SingleClass)));
    }
}

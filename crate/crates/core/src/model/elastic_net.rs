//! Elastic-net penalized logistic regression by proximal gradient descent.
//!
//! Objective, with the intercept left unpenalized:
//!
//! ```text
//! mean log-loss(theta) + lambda * ((1 - alpha) / 2 * ||w||_2^2 + alpha * ||w||_1)
//! ```
//!
//! Each step takes a gradient step on the smooth part (log-loss plus the
//! ridge term) with step `1 / L`, then soft-thresholds the weights by
//! `lambda * alpha / L`. The fit stops when no parameter moves by more
//! than `tolerance`.

use ndarray::{Array1, ArrayView2};
use serde::{Deserialize, Serialize};

use super::linear::{log_loss_and_grad, log_loss_lipschitz, LinearModel};
use super::{check_training_data, Family, FittedParams, ModelSpec, TrainedClassifier, TrainingMeta};
use crate::error::{Error, Result};

pub const L1_RATIO_GRID: [f64; 4] = [0.1, 0.2, 0.3, 0.5];
pub const TOLERANCE_GRID: [f64; 4] = [1e-5, 1e-4, 1e-3, 1e-2];
pub const LAMBDA_GRID: [f64; 7] = [0.1, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0];

fn default_max_iter() -> usize {
    20_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElasticNetParams {
    /// Mixing weight `alpha` of the L1 term.
    pub l1_ratio: f64,
    pub tolerance: f64,
    /// Overall penalty strength `lambda`.
    pub lambda: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
}

impl ElasticNetParams {
    pub fn new(l1_ratio: f64, tolerance: f64, lambda: f64) -> Self {
        Self { l1_ratio, tolerance, lambda, max_iter: default_max_iter() }
    }
}

/// Smooth part of the objective (log-loss plus ridge term) and its
/// gradient, flattened as `[intercept, w_1, ..., w_d]`.
pub fn smooth_objective(x: ArrayView2<f64>, y: &[bool], theta: &[f64], lambda: f64, l1_ratio: f64) -> (f64, Vec<f64>) {
    let model = LinearModel { intercept: theta[0], weights: theta[1..].to_vec() };
    let (loss, gb, gw) = log_loss_and_grad(x, y, &model);
    let ridge = lambda * (1.0 - l1_ratio);
    let penalty = 0.5 * ridge * model.weights.iter().map(|w| w * w).sum::<f64>();
    let mut grad = Vec::with_capacity(theta.len());
    grad.push(gb);
    grad.extend(gw.iter().zip(&model.weights).map(|(g, w)| g + ridge * w));
    (loss + penalty, grad)
}

/// Full penalized objective.
pub fn objective(x: ArrayView2<f64>, y: &[bool], model: &LinearModel, params: &ElasticNetParams) -> f64 {
    let mut theta = vec![model.intercept];
    theta.extend_from_slice(&model.weights);
    let (smooth, _) = smooth_objective(x, y, &theta, params.lambda, params.l1_ratio);
    smooth + params.lambda * params.l1_ratio * model.weights.iter().map(|w| w.abs()).sum::<f64>()
}

fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

pub fn fit_elastic_net(
    x: ArrayView2<f64>,
    y: &[bool],
    params: &ElasticNetParams,
    seed: u64,
) -> Result<TrainedClassifier> {
    check_training_data(x, y, true)?;
    if !(params.lambda > 0.0) {
        return Err(Error::invalid(format!(
            "elastic net needs lambda > 0 (got {}); use logistic regression for lambda = 0",
            params.lambda
        )));
    }
    if !(0.0..=1.0).contains(&params.l1_ratio) {
        return Err(Error::invalid(format!("l1_ratio must lie in [0, 1], got {}", params.l1_ratio)));
    }
    if !(params.tolerance > 0.0) {
        return Err(Error::invalid("tolerance must be positive"));
    }
    let ridge = params.lambda * (1.0 - params.l1_ratio);
    let lipschitz = log_loss_lipschitz(x) + ridge;
    let step = 1.0 / lipschitz;
    let shrink = step * params.lambda * params.l1_ratio;

    let mut model = LinearModel::zeros(x.ncols());
    let mut iterations = 0;
    let mut stop_reason = "max_iterations".to_string();
    for it in 0..params.max_iter {
        iterations = it + 1;
        let (_, gb, gw) = log_loss_and_grad(x, y, &model);
        let new_intercept = model.intercept - step * gb;
        let mut max_change = (new_intercept - model.intercept).abs();
        model.intercept = new_intercept;
        for (w, g) in model.weights.iter_mut().zip(gw.iter()) {
            let updated = soft_threshold(*w - step * (g + ridge * *w), shrink);
            max_change = max_change.max((updated - *w).abs());
            *w = updated;
        }
        if max_change < params.tolerance {
            stop_reason = "parameter_tolerance".into();
            break;
        }
    }

    Ok(TrainedClassifier {
        family: Family::ElasticNet,
        spec: ModelSpec::ElasticNet(params.clone()),
        width: x.ncols(),
        layout_fingerprint: None,
        seed,
        meta: TrainingMeta { iterations, stop_reason, lipschitz: Some(lipschitz), ..Default::default() },
        params: FittedParams::Linear(model),
    })
}

/// Largest violation of the zero-coefficient optimality condition
/// `|dL/dw_j| <= lambda * alpha` over coefficients that are exactly zero.
pub fn zero_coefficient_violation(
    x: ArrayView2<f64>,
    y: &[bool],
    model: &LinearModel,
    params: &ElasticNetParams,
) -> f64 {
    let (_, _, gw): (f64, f64, Array1<f64>) = log_loss_and_grad(x, y, model);
    model
        .weights
        .iter()
        .zip(gw.iter())
        .filter(|(w, _)| **w == 0.0)
        .map(|(_, g)| (g.abs() - params.lambda * params.l1_ratio).max(0.0))
        .fold(0.0, f64::max)
}

/// Bound on [`zero_coefficient_violation`] guaranteed once the fit stopped
/// on its parameter tolerance `tol`.
///
/// A proximal step that leaves `w_j` at zero while moving it by less than
/// `tol` implies `|g_j| <= lambda * alpha + tol * (L + ridge)` at the
/// previous iterate; the gradient at the returned iterate differs by at most
/// `L * ||delta||_2 <= L * tol * sqrt(d + 1)`.
pub fn violation_bound(model: &TrainedClassifier) -> Option<f64> {
    match (&model.spec, model.meta.lipschitz) {
        (ModelSpec::ElasticNet(p), Some(l)) if model.meta.stop_reason == "parameter_tolerance" => {
            let d = model.width as f64;
            Some(p.tolerance * l * (2.0 + (d + 1.0).sqrt()))
        }
        _ => None,
    }
}

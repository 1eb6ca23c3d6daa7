//! Fully connected ReLU network with a sigmoid output, trained with AdamW
//! on binary cross-entropy plus L1 and L2 weight penalties.
//!
//! 10% of the training rows (stratified) are held out; training stops after
//! `patience` epochs without a new best validation loss, and the weights of
//! the best epoch are restored.

use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{check_training_data, sigmoid, softplus, Family, FittedParams, ModelSpec, TrainedClassifier, TrainingMeta};
use crate::error::{Error, Result};

pub const WIDTH_MULTIPLIER_GRID: [f64; 6] = [0.25, 0.5, 0.75, 1.0, 1.5, 2.0];
pub const HIDDEN_LAYERS_GRID: [usize; 3] = [2, 3, 4];
pub const DROPOUT_GRID: [f64; 2] = [0.0, 0.2];
pub const BATCH_SIZE_GRID: [usize; 3] = [128, 256, 512];
pub const LEARNING_RATE_GRID: [f64; 3] = [1e-3, 1e-4, 1e-5];

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

fn d_max_epochs() -> usize {
    500
}
fn d_patience() -> usize {
    3
}
fn d_penalty() -> f64 {
    1e-5
}
fn d_weight_decay() -> f64 {
    0.01
}
fn d_validation() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetParams {
    pub width_multiplier: f64,
    pub n_hidden_layers: usize,
    pub dropout: f64,
    pub batch_size: usize,
    pub learning_rate: f64,
    #[serde(default = "d_max_epochs")]
    pub max_epochs: usize,
    #[serde(default = "d_patience")]
    pub patience: usize,
    #[serde(default = "d_penalty")]
    pub l1_penalty: f64,
    #[serde(default = "d_penalty")]
    pub l2_penalty: f64,
    #[serde(default = "d_weight_decay")]
    pub weight_decay: f64,
    #[serde(default = "d_validation")]
    pub validation_fraction: f64,
}

impl NetParams {
    pub fn new(
        width_multiplier: f64,
        n_hidden_layers: usize,
        dropout: f64,
        batch_size: usize,
        learning_rate: f64,
    ) -> Self {
        Self {
            width_multiplier,
            n_hidden_layers,
            dropout,
            batch_size,
            learning_rate,
            max_epochs: d_max_epochs(),
            patience: d_patience(),
            l1_penalty: d_penalty(),
            l2_penalty: d_penalty(),
            weight_decay: d_weight_decay(),
            validation_fraction: d_validation(),
        }
    }
}

/// Width shared by every hidden layer: `round(input_dim * multiplier)`, at least 1.
pub fn hidden_width(input_dim: usize, multiplier: f64) -> usize {
    ((input_dim as f64 * multiplier).round() as usize).max(1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    /// `inputs x outputs`
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    /// Hidden layers followed by the single-unit output layer.
    pub layers: Vec<Dense>,
}

struct Trace {
    /// Input to each layer (after activation and dropout).
    inputs: Vec<Array2<f64>>,
    /// Combined ReLU and dropout scaling applied to each hidden output.
    gates: Vec<Array2<f64>>,
    logits: Array1<f64>,
}

impl Mlp {
    pub fn init(input_dim: usize, hidden: usize, n_hidden: usize, rng: &mut ChaCha8Rng) -> Self {
        let mut layers = Vec::with_capacity(n_hidden + 1);
        let mut fan_in = input_dim;
        for k in 0..=n_hidden {
            let out = if k == n_hidden { 1 } else { hidden };
            let gain = if k == n_hidden { 1.0 } else { 2.0 };
            let scale = (gain / fan_in.max(1) as f64).sqrt();
            let w = Array2::from_shape_fn((fan_in, out), |_| scale * rng.sample::<f64, _>(StandardNormal));
            layers.push(Dense { w, b: Array1::zeros(out) });
            fan_in = out;
        }
        Self { layers }
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].w.nrows()
    }

    fn forward(&self, x: ArrayView2<f64>, dropout: Option<(f64, &mut ChaCha8Rng)>) -> Trace {
        let mut inputs = vec![x.to_owned()];
        let mut gates = Vec::with_capacity(self.layers.len() - 1);
        let mut dropout = dropout;
        let last = self.layers.len() - 1;
        for (k, layer) in self.layers.iter().enumerate() {
            let pre = inputs[k].dot(&layer.w) + &layer.b;
            if k == last {
                let logits = pre.column(0).to_owned();
                return Trace { inputs, gates, logits };
            }
            let mut gate = pre.mapv(|v| if v > 0.0 { 1.0 } else { 0.0 });
            if let Some((p, rng)) = dropout.as_mut() {
                if *p > 0.0 {
                    let keep = 1.0 / (1.0 - *p);
                    gate.mapv_inplace(|g| if rng.random::<f64>() < *p { 0.0 } else { g * keep });
                }
            }
            inputs.push(&pre * &gate);
            gates.push(gate);
        }
        unreachable!("network has an output layer")
    }

    pub fn predict_proba(&self, x: ArrayView2<f64>) -> Vec<f64> {
        self.forward(x, None).logits.iter().map(|&z| sigmoid(z)).collect()
    }

    fn penalty(&self, l1: f64, l2: f64) -> f64 {
        self.layers.iter().map(|l| l.w.iter().map(|w| l1 * w.abs() + l2 * w * w).sum::<f64>()).sum()
    }

    /// Mean binary cross-entropy of logits.
    fn bce(logits: &Array1<f64>, y: &[bool]) -> f64 {
        let n = y.len() as f64;
        logits.iter().zip(y).map(|(&z, &t)| softplus(z) - if t { z } else { 0.0 }).sum::<f64>() / n
    }

    fn backward(&self, trace: &Trace, y: &[bool], l1: f64, l2: f64) -> Vec<Dense> {
        let n = y.len() as f64;
        let dz: Array1<f64> =
            trace.logits.iter().zip(y).map(|(&z, &t)| (sigmoid(z) - if t { 1.0 } else { 0.0 }) / n).collect();
        let mut delta = dz.insert_axis(Axis(1));
        let mut grads = Vec::with_capacity(self.layers.len());
        for k in (0..self.layers.len()).rev() {
            let layer = &self.layers[k];
            let mut gw = trace.inputs[k].t().dot(&delta);
            Zip::from(&mut gw).and(&layer.w).for_each(|g, &w| {
                *g += l1 * w.signum() * (w != 0.0) as u8 as f64 + 2.0 * l2 * w;
            });
            let gb = delta.sum_axis(Axis(0));
            if k > 0 {
                delta = delta.dot(&layer.w.t()) * &trace.gates[k - 1];
            }
            grads.push(Dense { w: gw, b: gb });
        }
        grads.reverse();
        grads
    }

    /// Penalized training loss without dropout.
    pub fn objective(&self, x: ArrayView2<f64>, y: &[bool], l1: f64, l2: f64) -> f64 {
        Self::bce(&self.forward(x, None).logits, y) + self.penalty(l1, l2)
    }

    /// Gradient of [`Mlp::objective`], flattened like [`Mlp::flat_params`].
    pub fn gradient(&self, x: ArrayView2<f64>, y: &[bool], l1: f64, l2: f64) -> Vec<f64> {
        let trace = self.forward(x, None);
        Mlp { layers: self.backward(&trace, y, l1, l2) }.flat_params()
    }

    /// All parameters, layer by layer: weights row-major, then biases.
    pub fn flat_params(&self) -> Vec<f64> {
        self.layers.iter().flat_map(|l| l.w.iter().chain(l.b.iter()).copied()).collect()
    }

    pub fn set_flat_params(&mut self, flat: &[f64]) {
        let mut it = flat.iter().copied();
        for l in &mut self.layers {
            l.w.iter_mut().chain(l.b.iter_mut()).for_each(|v| *v = it.next().expect("parameter count"));
        }
    }
}

struct AdamW {
    m: Vec<Dense>,
    v: Vec<Dense>,
    t: i32,
    lr: f64,
    weight_decay: f64,
}

impl AdamW {
    fn new(net: &Mlp, lr: f64, weight_decay: f64) -> Self {
        let zeros = |net: &Mlp| {
            net.layers
                .iter()
                .map(|l| Dense { w: Array2::zeros(l.w.raw_dim()), b: Array1::zeros(l.b.len()) })
                .collect::<Vec<_>>()
        };
        Self { m: zeros(net), v: zeros(net), t: 0, lr, weight_decay }
    }

    fn step(&mut self, net: &mut Mlp, grads: &[Dense]) {
        self.t += 1;
        let c1 = 1.0 - BETA1.powi(self.t);
        let c2 = 1.0 - BETA2.powi(self.t);
        let (lr, wd) = (self.lr, self.weight_decay);
        let update = |p: &mut f64, g: f64, m: &mut f64, v: &mut f64, decay: bool| {
            if decay {
                *p -= lr * wd * *p;
            }
            *m = BETA1 * *m + (1.0 - BETA1) * g;
            *v = BETA2 * *v + (1.0 - BETA2) * g * g;
            *p -= lr * (*m / c1) / ((*v / c2).sqrt() + ADAM_EPS);
        };
        for (k, layer) in net.layers.iter_mut().enumerate() {
            Zip::from(&mut layer.w)
                .and(&grads[k].w)
                .and(&mut self.m[k].w)
                .and(&mut self.v[k].w)
                .for_each(|p, &g, m, v| update(p, g, m, v, true));
            Zip::from(&mut layer.b)
                .and(&grads[k].b)
                .and(&mut self.m[k].b)
                .and(&mut self.v[k].b)
                .for_each(|p, &g, m, v| update(p, g, m, v, false));
        }
    }
}

/// Stratified hold-out: `(train, validation)` row indices.
fn holdout(y: &[bool], fraction: f64, rng: &mut ChaCha8Rng) -> (Vec<usize>, Vec<usize>) {
    let mut train = Vec::new();
    let mut val = Vec::new();
    for class in [false, true] {
        let mut idx: Vec<usize> = (0..y.len()).filter(|&i| y[i] == class).collect();
        idx.shuffle(rng);
        let mut k = (fraction * idx.len() as f64).round() as usize;
        if k == 0 && idx.len() >= 2 && fraction > 0.0 {
            k = 1;
        }
        val.extend_from_slice(&idx[..k]);
        train.extend_from_slice(&idx[k..]);
    }
    train.sort_unstable();
    val.sort_unstable();
    (train, val)
}

pub fn fit_neural_net(x: ArrayView2<f64>, y: &[bool], params: &NetParams, seed: u64) -> Result<TrainedClassifier> {
    check_training_data(x, y, true)?;
    if params.n_hidden_layers == 0 {
        return Err(Error::invalid("network needs at least one hidden layer"));
    }
    if !(0.0..1.0).contains(&params.dropout) {
        return Err(Error::invalid("dropout must lie in [0, 1)"));
    }
    if params.batch_size == 0 || !(params.learning_rate > 0.0) {
        return Err(Error::invalid("batch_size and learning_rate must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (train_idx, val_idx) = holdout(y, params.validation_fraction, &mut rng);
    let x_val = x.select(Axis(0), &val_idx);
    let y_val: Vec<bool> = val_idx.iter().map(|&i| y[i]).collect();

    let mut batch_size = params.batch_size;
    if batch_size > train_idx.len() {
        log::warn!("batch size {batch_size} exceeds {} training rows; clamping", train_idx.len());
        batch_size = train_idx.len();
    }

    let width = hidden_width(x.ncols(), params.width_multiplier);
    let mut net = Mlp::init(x.ncols(), width, params.n_hidden_layers, &mut rng);
    let mut opt = AdamW::new(&net, params.learning_rate, params.weight_decay);
    let mut best = net.clone();
    let mut best_loss = f64::INFINITY;
    let mut since_best = 0;
    let mut epochs = 0;
    let mut stop_reason = "max_epochs".to_string();
    let mut order = train_idx.clone();

    for epoch in 0..params.max_epochs {
        epochs = epoch + 1;
        order.shuffle(&mut rng);
        for batch in order.chunks(batch_size) {
            let xb = x.select(Axis(0), batch);
            let yb: Vec<bool> = batch.iter().map(|&i| y[i]).collect();
            let trace = net.forward(xb.view(), Some((params.dropout, &mut rng)));
            let grads = net.backward(&trace, &yb, params.l1_penalty, params.l2_penalty);
            opt.step(&mut net, &grads);
        }
        let val_loss = if val_idx.is_empty() {
            let xt = x.select(Axis(0), &train_idx);
            let yt: Vec<bool> = train_idx.iter().map(|&i| y[i]).collect();
            Mlp::bce(&net.forward(xt.view(), None).logits, &yt)
        } else {
            Mlp::bce(&net.forward(x_val.view(), None).logits, &y_val)
        };
        if !val_loss.is_finite() {
            stop_reason = "non_finite_loss".into();
            break;
        }
        if val_loss < best_loss {
            best_loss = val_loss;
            best = net.clone();
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= params.patience {
                stop_reason = "early_stopping".into();
                break;
            }
        }
    }

    Ok(TrainedClassifier {
        family: Family::NeuralNet,
        spec: ModelSpec::NeuralNet(params.clone()),
        width: x.ncols(),
        layout_fingerprint: None,
        seed,
        meta: TrainingMeta {
            iterations: epochs,
            stop_reason,
            best_validation_loss: best_loss.is_finite().then_some(best_loss),
            ..Default::default()
        },
        params: FittedParams::Net(best),
    })
}

/// Validation loss of a fitted network on the hold-out it was trained with.
pub fn validation_loss(model: &Mlp, x: ArrayView2<f64>, y: &[bool]) -> f64 {
    Mlp::bce(&model.forward(x, None).logits, y)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn width_rule() {
        assert_eq!(hidden_width(100, 0.5), 50);
        assert_eq!(hidden_width(100, 0.25), 25);
        assert_eq!(hidden_width(3, 0.25), 1);
        assert_eq!(hidden_width(10, 1.5), 15);
    }

    #[test]
    fn holdout_is_stratified_and_disjoint() {
        let y: Vec<bool> = (0..100).map(|i| i % 4 == 0).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (tr, va) = holdout(&y, 0.1, &mut rng);
        assert_eq!(tr.len() + va.len(), 100);
        assert_eq!(va.iter().filter(|&&i| y[i]).count(), 3); // round(2.5) = 3
        assert_eq!(va.len(), 3 + 8);
        assert!(tr.iter().all(|i| !va.contains(i)));
    }

    #[test]
    fn flat_params_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let net = Mlp::init(3, 4, 2, &mut rng);
        let flat = net.flat_params();
        assert_eq!(flat.len(), 3 * 4 + 4 + 4 * 4 + 4 + 4 + 1);
        let mut other = Mlp::init(3, 4, 2, &mut rng);
        other.set_flat_params(&flat);
        assert_eq!(other, net);
    }
}

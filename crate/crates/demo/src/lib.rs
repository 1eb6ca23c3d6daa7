//! Three small views of the evaluation and attribution code, callable from
//! a web page. Each returns a JSON string.
//!
//! The `*_json` functions are plain Rust and carry the logic; the exported
//! wrappers only turn errors into JavaScript exceptions.

use ndarray::{Array1, Array2, ArrayView2};
use serde::Serialize;
use vfuse_core::eval::{auroc, average_precision, compute_metrics, compute_roi, MetricsReport, RoiParams};
use vfuse_core::explain::{shap_attributions, Player, ShapMode, MAX_EXACT_PLAYERS};
use vfuse_core::model::{sigmoid, Predictor};
use wasm_bindgen::prelude::*;

pub type DemoResult<T> = Result<T, String>;

/// Rows invested in per curve point; large enough that rounding is invisible.
const PORTFOLIO: usize = 100_000;

#[derive(Debug, Serialize)]
pub struct RoiPoint {
    pub precision: f64,
    pub roi: f64,
}

#[derive(Debug, Serialize)]
pub struct RoiCurve {
    pub params: RoiParams,
    pub points: Vec<RoiPoint>,
    /// Precision (percent) at which ROI crosses zero, if it does in [0, 100].
    pub break_even: Option<f64>,
}

pub fn roi_curve_json(fiv_tp: f64, fiv_fp: f64, ic: f64, steps: usize) -> DemoResult<String> {
    let params = RoiParams { fiv_tp, fiv_fp, ic };
    params.validate().map_err(|e| e.to_string())?;
    let steps = steps.clamp(2, 1000);
    let points = (0..=steps)
        .map(|k| {
            let precision = 100.0 * k as f64 / steps as f64;
            let tp = (PORTFOLIO as f64 * precision / 100.0).round() as usize;
            let roi = compute_roi(tp, PORTFOLIO - tp, &params).expect("portfolio is never empty");
            RoiPoint { precision, roi }
        })
        .collect();
    let break_even = if fiv_tp != fiv_fp {
        Some(100.0 * (ic - fiv_fp) / (fiv_tp - fiv_fp)).filter(|p| (0.0..=100.0).contains(p))
    } else {
        None
    };
    Ok(serde_json::to_string(&RoiCurve { params, points, break_even }).expect("serializes"))
}

#[derive(Debug, Serialize)]
pub struct RocView {
    /// Fractions, not percent.
    pub auroc: Option<f64>,
    pub aucpr: Option<f64>,
    /// `(fpr, tpr)` from (0, 0) to (1, 1), one step per distinct score.
    pub roc: Vec<(f64, f64)>,
    /// Percentages, as everywhere else in the metrics report.
    pub at_threshold: MetricsReport,
}

pub fn roc_explorer_json(labels: &[u8], scores: &[f64], threshold: f64) -> DemoResult<String> {
    if labels.len() != scores.len() {
        return Err(format!("{} labels but {} scores", labels.len(), scores.len()));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err("scores must be finite".into());
    }
    let y: Vec<bool> = labels.iter().map(|&l| l != 0).collect();
    let at_threshold = compute_metrics(&y, scores, threshold, &RoiParams::default()).map_err(|e| e.to_string())?;
    let view = RocView {
        auroc: auroc(&y, scores),
        aucpr: average_precision(&y, scores),
        roc: roc_points(&y, scores),
        at_threshold,
    };
    Ok(serde_json::to_string(&view).expect("serializes"))
}

pub fn roc_points(y: &[bool], scores: &[f64]) -> Vec<(f64, f64)> {
    let n_pos = y.iter().filter(|&&b| b).count();
    let n_neg = y.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Vec::new();
    }
    let mut order: Vec<usize> = (0..y.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut points = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        for &k in &order[i..=j] {
            if y[k] {
                tp += 1;
            } else {
                fp += 1;
            }
        }
        points.push((fp as f64 / n_neg as f64, tp as f64 / n_pos as f64));
        i = j + 1;
    }
    points
}

struct Linear {
    weights: Array1<f64>,
    intercept: f64,
    logistic: bool,
}

impl Predictor for Linear {
    fn width(&self) -> usize {
        self.weights.len()
    }

    fn predict_proba(&self, x: ArrayView2<f64>) -> vfuse_core::Result<Vec<f64>> {
        Ok(x.dot(&self.weights)
            .iter()
            .map(|&m| if self.logistic { sigmoid(m + self.intercept) } else { m + self.intercept })
            .collect())
    }
}

#[derive(Debug, Serialize)]
pub struct ShapView {
    pub values: Vec<f64>,
    /// `w_j (x_j - mean_j)`; equals `values` on the identity link.
    pub closed_form: Vec<f64>,
    pub base_value: f64,
    pub output: f64,
    /// `base_value + sum(values) - output`.
    pub efficiency_gap: f64,
    pub max_closed_form_gap: f64,
}

/// Exact Shapley values of a linear score (or its sigmoid) for one row
/// against a background set given row-major.
pub fn shap_linear_json(
    weights: &[f64],
    intercept: f64,
    x: &[f64],
    background: &[f64],
    logistic: bool,
) -> DemoResult<String> {
    let p = weights.len();
    if p == 0 || p > MAX_EXACT_PLAYERS {
        return Err(format!("need between 1 and {MAX_EXACT_PLAYERS} features, got {p}"));
    }
    if x.len() != p {
        return Err(format!("row has {} values for {p} weights", x.len()));
    }
    if background.is_empty() || background.len() % p != 0 {
        return Err(format!("background length {} is not a positive multiple of {p}", background.len()));
    }
    let bg = Array2::from_shape_vec((background.len() / p, p), background.to_vec()).map_err(|e| e.to_string())?;
    let row = Array1::from(x.to_vec());
    let model = Linear { weights: Array1::from(weights.to_vec()), intercept, logistic };
    let players: Vec<Player> = (0..p).map(|j| Player { name: format!("x{}", j + 1), range: j..j + 1 }).collect();
    let attr =
        shap_attributions(&model, bg.view(), row.view(), &players, ShapMode::Exact, 0, 0).map_err(|e| e.to_string())?;
    let means = bg.mean_axis(ndarray::Axis(0)).expect("non-empty background");
    let closed_form: Vec<f64> = (0..p).map(|j| weights[j] * (x[j] - means[j])).collect();
    let max_closed_form_gap = attr.values.iter().zip(&closed_form).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let view = ShapView {
        efficiency_gap: attr.efficiency_gap(),
        values: attr.values,
        closed_form,
        base_value: attr.base_value,
        output: attr.output,
        max_closed_form_gap,
    };
    Ok(serde_json::to_string(&view).expect("serializes"))
}

#[wasm_bindgen]
pub fn roi_curve(fiv_tp: f64, fiv_fp: f64, ic: f64, steps: usize) -> Result<String, JsError> {
    roi_curve_json(fiv_tp, fiv_fp, ic, steps).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn roc_explorer(labels: &[u8], scores: &[f64], threshold: f64) -> Result<String, JsError> {
    roc_explorer_json(labels, scores, threshold).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn shap_linear_demo(
    weights: &[f64],
    intercept: f64,
    x: &[f64],
    background: &[f64],
    logistic: bool,
) -> Result<String, JsError> {
    shap_linear_json(weights, intercept, x, background, logistic).map_err(|e| JsError::new(&e))
}

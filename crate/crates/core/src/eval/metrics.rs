//! Threshold metrics, ranking metrics and portfolio return.
//!
//! All rates are reported as percentages. A ratio whose denominator is zero
//! is `None` and its name is listed in [`MetricsReport::undefined`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Valuation constants for the return-on-investment metric, in millions USD.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoiParams {
    /// Value of an investment in a startup that turns out successful.
    pub fiv_tp: f64,
    /// Value of an investment in a startup that does not.
    pub fiv_fp: f64,
    /// Cost of one investment, screening included.
    pub ic: f64,
}

impl Default for RoiParams {
    fn default() -> Self {
        Self { fiv_tp: 184.47, fiv_fp: 0.0, ic: 12.19 * 1.1 }
    }
}

impl RoiParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.ic > 0.0) || !self.ic.is_finite() {
            return Err(Error::invalid(format!("investment cost must be positive, got {}", self.ic)));
        }
        if !(self.fiv_fp >= 0.0) || !self.fiv_tp.is_finite() || !self.fiv_fp.is_finite() {
            return Err(Error::invalid("final investment values must be finite and fiv_fp >= 0"));
        }
        Ok(())
    }
}

/// Net gain over total cost of investing in every predicted success, in percent.
/// `None` when nothing was predicted successful.
pub fn compute_roi(tp: usize, fp: usize, params: &RoiParams) -> Option<f64> {
    let invested = (tp + fp) as f64;
    if tp + fp == 0 {
        return None;
    }
    let cost = invested * params.ic;
    let value = tp as f64 * params.fiv_tp + fp as f64 * params.fiv_fp;
    Some((value - cost) / cost * 100.0)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Confusion {
    pub fn from_predictions(y: &[bool], predicted: &[bool]) -> Self {
        let mut c = Confusion::default();
        for (&t, &p) in y.iter().zip(predicted) {
            match (t, p) {
                (true, true) => c.tp += 1,
                (false, true) => c.fp += 1,
                (false, false) => c.tn += 1,
                (true, false) => c.fn_ += 1,
            }
        }
        c
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn add(&mut self, other: &Confusion) {
        self.tp += other.tp;
        self.fp += other.fp;
        self.tn += other.tn;
        self.fn_ += other.fn_;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub n: usize,
    pub threshold: f64,
    #[serde(flatten)]
    pub confusion: Confusion,
    /// Share of correctly classified rows.
    pub accuracy: Option<f64>,
    pub balanced_accuracy: Option<f64>,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
    pub auroc: Option<f64>,
    pub aucpr: Option<f64>,
    pub roi: Option<f64>,
    /// Names of the metrics above that are undefined on this data.
    pub undefined: Vec<String>,
}

pub const METRIC_NAMES: [&str; 8] =
    ["accuracy", "balanced_accuracy", "precision", "recall", "f1", "auroc", "aucpr", "roi"];

impl MetricsReport {
    pub fn get(&self, name: &str) -> Option<f64> {
        match name {
            "accuracy" => self.accuracy,
            "balanced_accuracy" => self.balanced_accuracy,
            "precision" => self.precision,
            "recall" => self.recall,
            "f1" => self.f1,
            "auroc" => self.auroc,
            "aucpr" => self.aucpr,
            "roi" => self.roi,
            _ => None,
        }
    }
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

fn check_inputs(y: &[bool], scores: &[f64]) -> Result<()> {
    if y.len() != scores.len() {
        return Err(Error::DimensionMismatch { expected: y.len(), actual: scores.len() });
    }
    if let Some(s) = scores.iter().find(|s| !(0.0..=1.0).contains(*s)) {
        return Err(Error::invalid(format!("score {s} outside [0, 1]")));
    }
    Ok(())
}

/// Probability that a random positive outranks a random negative, ties
/// counting one half. `None` unless both classes are present.
pub fn auroc(y: &[bool], scores: &[f64]) -> Option<f64> {
    let n_pos = y.iter().filter(|&&b| b).count();
    let n_neg = y.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..y.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // Mann-Whitney: sum of mid-ranks of the positives
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let mid_rank = (i + j) as f64 / 2.0 + 1.0;
        rank_sum += mid_rank * order[i..=j].iter().filter(|&&k| y[k]).count() as f64;
        i = j + 1;
    }
    let u = rank_sum - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Some(u / (n_pos as f64 * n_neg as f64))
}

/// Average precision: `sum_k (R_k - R_{k-1}) * P_k` over descending distinct
/// score thresholds. `None` without positives.
pub fn average_precision(y: &[bool], scores: &[f64]) -> Option<f64> {
    let n_pos = y.iter().filter(|&&b| b).count();
    if n_pos == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..y.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let (mut tp, mut seen) = (0usize, 0usize);
    let mut prev_recall = 0.0;
    let mut ap = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        tp += order[i..=j].iter().filter(|&&k| y[k]).count();
        seen += j - i + 1;
        let recall = tp as f64 / n_pos as f64;
        ap += (recall - prev_recall) * tp as f64 / seen as f64;
        prev_recall = recall;
        i = j + 1;
    }
    Some(ap)
}

/// Every metric at once; rows with `score >= threshold` are predicted successful.
pub fn compute_metrics(y: &[bool], scores: &[f64], threshold: f64, roi: &RoiParams) -> Result<MetricsReport> {
    check_inputs(y, scores)?;
    let predicted: Vec<bool> = scores.iter().map(|&s| s >= threshold).collect();
    let c = Confusion::from_predictions(y, &predicted);

    let pct = |v: Option<f64>| v.map(|v| v * 100.0);
    let tpr = ratio(c.tp, c.tp + c.fn_);
    let tnr = ratio(c.tn, c.tn + c.fp);
    let precision = ratio(c.tp, c.tp + c.fp);
    let f1 = match (precision, tpr) {
        (Some(_), Some(_)) => ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn_),
        _ => None,
    };
    let mut report = MetricsReport {
        n: y.len(),
        threshold,
        confusion: c,
        accuracy: pct(ratio(c.tp + c.tn, c.total())),
        balanced_accuracy: pct(tpr.zip(tnr).map(|(a, b)| (a + b) / 2.0)),
        precision: pct(precision),
        recall: pct(tpr),
        f1: pct(f1),
        auroc: pct(auroc(y, scores)),
        aucpr: pct(average_precision(y, scores)),
        roi: compute_roi(c.tp, c.fp, roi),
        undefined: Vec::new(),
    };
    report.undefined = METRIC_NAMES.iter().filter(|m| report.get(m).is_none()).map(|m| m.to_string()).collect();
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn four_point_auroc() {
        let y = [true, false, true, false];
        let s = [0.9, 0.8, 0.7, 0.3];
        assert!((auroc(&y, &s).unwrap() - 0.75).abs() < 1e-12);
        let r = compute_metrics(&y, &s, 0.5, &RoiParams::default()).unwrap();
        assert!((r.auroc.unwrap() - 75.0).abs() < 1e-9);
    }

    #[test]
    fn balanced_accuracy_formula() {
        // 5 positives with 4 caught, 5 negatives with 3 rejected
        let y = [true, true, true, true, true, false, false, false, false, false];
        let s = [0.9, 0.9, 0.9, 0.9, 0.1, 0.1, 0.1, 0.1, 0.9, 0.9];
        let r = compute_metrics(&y, &s, 0.5, &RoiParams::default()).unwrap();
        assert!((r.balanced_accuracy.unwrap() - 70.0).abs() < 1e-9);
    }

    #[test]
    fn perfect_separation() {
        let y = [false, false, true, true];
        let s = [0.1, 0.2, 0.8, 0.9];
        let r = compute_metrics(&y, &s, 0.5, &RoiParams::default()).unwrap();
        assert_eq!(r.auroc, Some(100.0));
        assert_eq!(r.aucpr, Some(100.0));
        assert_eq!(r.f1, Some(100.0));
    }

    #[test]
    fn roi_from_precision() {
        let p = RoiParams::default();
        // 3659 hits in 10000 picks
        let roi = compute_roi(3659, 10000 - 3659, &p).unwrap();
        assert!((roi - 403.40).abs() < 0.1, "{roi}");
        assert_eq!(compute_roi(0, 5, &p), Some(-100.0));
        assert_eq!(compute_roi(0, 0, &p), None);
    }

    #[test]
    fn nothing_predicted_flags_precision_and_roi() {
        let y = [true, false, false];
        let r = compute_metrics(&y, &[0.0; 3], 0.5, &RoiParams::default()).unwrap();
        assert_eq!(r.precision, None);
        assert_eq!(r.roi, None);
        assert_eq!(r.f1, None);
        assert_eq!(r.recall, Some(0.0));
        assert_eq!(r.balanced_accuracy, Some(50.0));
        assert_eq!(r.auroc, Some(50.0));
        assert_eq!(r.undefined, vec!["precision", "f1", "roi"]);
    }

    #[test]
    fn single_class_auroc_flagged() {
        let r = compute_metrics(&[true, true], &[0.2, 0.9], 0.5, &RoiParams::default()).unwrap();
        assert!(r.undefined.contains(&"auroc".to_string()));
        assert!(r.undefined.contains(&"balanced_accuracy".to_string()));
    }

    #[test]
    fn rejects_out_of_range_scores() {
        assert!(compute_metrics(&[true, false], &[1.5, 0.0], 0.5, &RoiParams::default()).is_err());
    }
}

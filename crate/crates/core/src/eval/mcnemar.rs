//! Paired comparison of two classifiers on the same test rows.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McNemarResult {
    pub chi2: f64,
    /// Rows model A gets right and model B gets wrong.
    pub b: usize,
    /// Rows model A gets wrong and model B gets right.
    pub c: usize,
    /// Upper tail of chi-squared with one degree of freedom.
    pub p_value: f64,
    /// Set when the models never disagree in correctness.
    pub no_discordant_pairs: bool,
}

/// `chi2 = (b - c)^2 / (b + c)`, without continuity correction.
pub fn mcnemar_from_counts(b: usize, c: usize) -> McNemarResult {
    if b + c == 0 {
        return McNemarResult { chi2: 0.0, b, c, p_value: 1.0, no_discordant_pairs: true };
    }
    let diff = b as f64 - c as f64;
    let chi2 = diff * diff / (b + c) as f64;
    let dist = ChiSquared::new(1.0).expect("one degree of freedom");
    McNemarResult { chi2, b, c, p_value: dist.sf(chi2), no_discordant_pairs: false }
}

pub fn mcnemar_test(pred_a: &[bool], pred_b: &[bool], y: &[bool]) -> Result<McNemarResult> {
    if pred_a.len() != y.len() || pred_b.len() != y.len() {
        return Err(Error::invalid(format!(
            "prediction lengths {} and {} do not match {} labels",
            pred_a.len(),
            pred_b.len(),
            y.len()
        )));
    }
    let (mut b, mut c) = (0, 0);
    for ((&a, &p), &t) in pred_a.iter().zip(pred_b).zip(y) {
        match (a == t, p == t) {
            (true, false) => b += 1,
            (false, true) => c += 1,
            _ => {}
        }
    }
    Ok(mcnemar_from_counts(b, c))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ten_versus_two() {
        let r = mcnemar_from_counts(10, 2);
        assert!((r.chi2 - 16.0 / 3.0).abs() < 1e-12);
        assert!(r.p_value > 0.02 && r.p_value < 0.022);
    }

    #[test]
    fn identical_predictions() {
        let p = [true, false, true];
        let r = mcnemar_test(&p, &p, &[true, true, false]).unwrap();
        assert_eq!(r.chi2, 0.0);
        assert!(r.no_discordant_pairs);
    }

    #[test]
    fn symmetric_in_models() {
        let y = [true, true, false, false, true];
        let a = [true, false, false, true, true];
        let b = [false, true, true, true, true];
        assert_eq!(mcnemar_test(&a, &b, &y).unwrap().chi2, mcnemar_test(&b, &a, &y).unwrap().chi2);
    }

    #[test]
    fn length_mismatch() {
        assert!(mcnemar_test(&[true], &[true, false], &[true]).is_err());
    }
}

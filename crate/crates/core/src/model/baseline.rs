//! Majority-vote and random-vote reference classifiers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Family, FittedParams, ModelSpec, TrainedClassifier, TrainingMeta};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineKind {
    Majority,
    Random,
}

/// Majority vote predicts the more frequent training class with certainty
/// (an exact 50/50 tie goes to class 0). Random vote predicts "successful"
/// with probability equal to the training prevalence.
pub fn fit_baseline(width: usize, y: &[bool], kind: BaselineKind, seed: u64) -> Result<TrainedClassifier> {
    if y.is_empty() {
        return Err(Error::invalid("baseline needs at least one label"));
    }
    let prevalence = y.iter().filter(|&&b| b).count() as f64 / y.len() as f64;
    let (family, spec, params) = match kind {
        BaselineKind::Majority => (
            Family::Majority,
            ModelSpec::Majority,
            FittedParams::Constant { probability: if prevalence > 0.5 { 1.0 } else { 0.0 } },
        ),
        BaselineKind::Random => (Family::Random, ModelSpec::Random, FittedParams::Random { prevalence, seed }),
    };
    Ok(TrainedClassifier {
        family,
        spec,
        width,
        layout_fingerprint: None,
        seed,
        meta: TrainingMeta { stop_reason: "closed_form".into(), ..Default::default() },
        params,
    })
}

/// Seeded 0/1 draws, one per row, reproducible for the same seed and row count.
pub(super) fn random_scores(prevalence: f64, seed: u64, n: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| if rng.random_bool(prevalence) { 1.0 } else { 0.0 }).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Predictor;
    use ndarray::Array2;

    #[test]
    fn majority_tie_breaks_to_zero() {
        let m = fit_baseline(2, &[true, false], BaselineKind::Majority, 0).unwrap();
        let x = Array2::zeros((3, 2));
        assert_eq!(m.predict_proba(x.view()).unwrap(), vec![0.0; 3]);

        let m = fit_baseline(2, &[true, true, false], BaselineKind::Majority, 0).unwrap();
        assert_eq!(m.predict_proba(x.view()).unwrap(), vec![1.0; 3]);
    }

    #[test]
    fn random_is_reproducible() {
        let y: Vec<bool> = (0..100).map(|i| i < 36).collect();
        let m = fit_baseline(1, &y, BaselineKind::Random, 9).unwrap();
        let x = Array2::zeros((50, 1));
        assert_eq!(m.predict_proba(x.view()).unwrap(), m.predict_proba(x.view()).unwrap());
    }
}

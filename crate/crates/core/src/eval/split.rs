//! Train/test partitions and cross-validation folds.

use chrono::NaiveDate;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitMode {
    StratifiedRandom,
    OutOfTime,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub mode: SplitMode,
    pub train_fraction: f64,
    pub n_repeats: usize,
    pub master_seed: u64,
    /// Founding-date boundary for [`SplitMode::OutOfTime`].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cutoff_date: Option<NaiveDate>,
}

impl Default for SplitPlan {
    fn default() -> Self {
        Self {
            mode: SplitMode::StratifiedRandom,
            train_fraction: 0.8,
            n_repeats: 5,
            master_seed: 42,
            cutoff_date: None,
        }
    }
}

impl SplitPlan {
    pub fn validate(&self) -> Result<()> {
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::Config {
                key: "split.train_fraction".into(),
                message: format!("must lie strictly between 0 and 1, got {}", self.train_fraction),
            });
        }
        if self.n_repeats == 0 {
            return Err(Error::Config { key: "split.n_repeats".into(), message: "must be at least 1".into() });
        }
        if self.mode == SplitMode::OutOfTime && self.cutoff_date.is_none() {
            return Err(Error::Config {
                key: "split.cutoff_date".into(),
                message: "out-of-time splits need a founding-date cutoff".into(),
            });
        }
        Ok(())
    }
}

/// Row indices of a two-way partition, each sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

fn class_indices(y: &[bool]) -> [Vec<usize>; 2] {
    let mut classes = [Vec::new(), Vec::new()];
    for (i, &b) in y.iter().enumerate() {
        classes[b as usize].push(i);
    }
    classes
}

/// Per class, a shuffled `round(n_c * train_fraction)` rows go to training
/// (at least one row of each class lands on each side).
pub fn stratified_split(y: &[bool], plan: &SplitPlan, repeat_index: usize) -> Result<Partition> {
    plan.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(plan.master_seed, &[repeat_index as u64]));
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (label, mut idx) in class_indices(y).into_iter().enumerate() {
        if idx.len() < 2 {
            return Err(Error::invalid(format!(
                "class {label} has {} member(s); a stratified split needs at least 2",
                idx.len()
            )));
        }
        idx.shuffle(&mut rng);
        let k = ((idx.len() as f64 * plan.train_fraction).round() as usize).clamp(1, idx.len() - 1);
        train.extend_from_slice(&idx[..k]);
        test.extend_from_slice(&idx[k..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok(Partition { train, test })
}

/// Rows founded before `cutoff` train, the rest test. Order is preserved.
pub fn out_of_time_split(founded_on: &[NaiveDate], cutoff: NaiveDate) -> Result<Partition> {
    let (train, test): (Vec<usize>, Vec<usize>) = (0..founded_on.len()).partition(|&i| founded_on[i] < cutoff);
    if train.is_empty() {
        return Err(Error::invalid(format!("no startup founded before {cutoff}; training side is empty")));
    }
    if test.is_empty() {
        return Err(Error::invalid(format!("no startup founded on or after {cutoff}; test side is empty")));
    }
    Ok(Partition { train, test })
}

/// Stratified fold id for every row: each class is shuffled and dealt round-robin.
pub fn stratified_folds(y: &[bool], n_folds: usize, seed: u64) -> Result<Vec<usize>> {
    if n_folds < 2 {
        return Err(Error::invalid("cross-validation needs at least 2 folds"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fold = vec![0; y.len()];
    for (label, mut idx) in class_indices(y).into_iter().enumerate() {
        if idx.len() < n_folds {
            return Err(Error::invalid(format!(
                "class {label} has {} member(s), fewer than the {n_folds} folds",
                idx.len()
            )));
        }
        idx.shuffle(&mut rng);
        for (k, i) in idx.into_iter().enumerate() {
            fold[i] = k % n_folds;
        }
    }
    Ok(fold)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hundred_rows_36_positive() {
        let y: Vec<bool> = (0..100).map(|i| i < 36).collect();
        let plan = SplitPlan::default();
        let p = stratified_split(&y, &plan, 0).unwrap();
        let train_pos = p.train.iter().filter(|&&i| y[i]).count();
        let test_pos = p.test.iter().filter(|&&i| y[i]).count();
        assert!((28..=29).contains(&train_pos));
        assert!((7..=8).contains(&test_pos));
        assert_eq!(p.train.len() + p.test.len(), 100);
        assert_eq!(p, stratified_split(&y, &plan, 0).unwrap());
        assert_ne!(p, stratified_split(&y, &plan, 1).unwrap());
    }

    #[test]
    fn tiny_class_rejected() {
        let y = [true, false, false, false];
        assert!(stratified_split(&y, &SplitPlan::default(), 0).is_err());
    }

    #[test]
    fn cohorts() {
        let d = |s: &str| s.parse::<NaiveDate>().unwrap();
        let founded = [d("2013-03-01"), d("2015-02-01"), d("2014-07-01"), d("2015-01-01")];
        let p = out_of_time_split(&founded, d("2015-01-01")).unwrap();
        assert_eq!(p.train, vec![0, 2]);
        assert_eq!(p.test, vec![1, 3]);
        assert!(out_of_time_split(&founded, d("2010-01-01")).is_err());
    }

    #[test]
    fn folds_balanced() {
        let y: Vec<bool> = (0..103).map(|i| i % 3 == 0).collect();
        let f = stratified_folds(&y, 10, 4).unwrap();
        for k in 0..10 {
            let pos = (0..103).filter(|&i| f[i] == k && y[i]).count();
            assert!((3..=4).contains(&pos));
        }
    }
}

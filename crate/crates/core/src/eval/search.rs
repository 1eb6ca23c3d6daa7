//! Randomized grid search scored by stratified k-fold cross-validated AUROC.

use std::io::Write;

use ndarray::{ArrayView2, Axis};
use rand::seq::index::sample as sample_indices;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::auroc;
use super::split::stratified_folds;
use crate::error::{Error, Result};
use crate::model::{
    derive_seed, elastic_net, fit, forest, neural, ClassifierConfig, ElasticNetParams, Family, ForestParams, ModelSpec,
    NetParams, Predictor,
};

pub const DEFAULT_FOLDS: usize = 10;
pub const DEFAULT_ITERATIONS: usize = 20;

/// Every configuration in the tuning grid of `family`.
pub fn full_grid(family: Family) -> Vec<ModelSpec> {
    match family {
        Family::ElasticNet => {
            let mut g = Vec::new();
            for &a in &elastic_net::L1_RATIO_GRID {
                for &t in &elastic_net::TOLERANCE_GRID {
                    for &l in &elastic_net::LAMBDA_GRID {
                        g.push(ModelSpec::ElasticNet(ElasticNetParams::new(a, t, l)));
                    }
                }
            }
            g
        }
        Family::RandomForest => {
            let mut g = Vec::new();
            for &f in &forest::PREDICTOR_FRACTION_GRID {
                for &r in &forest::SPLIT_RULE_GRID {
                    for &node in &forest::MIN_NODE_SIZE_GRID {
                        for &split in &forest::MIN_SPLIT_SIZE_GRID {
                            g.push(ModelSpec::RandomForest(ForestParams::new(f, r, node, split)));
                        }
                    }
                }
            }
            g
        }
        Family::NeuralNet => {
            let mut g = Vec::new();
            for &m in &neural::WIDTH_MULTIPLIER_GRID {
                for &layers in &neural::HIDDEN_LAYERS_GRID {
                    for &d in &neural::DROPOUT_GRID {
                        for &b in &neural::BATCH_SIZE_GRID {
                            for &lr in &neural::LEARNING_RATE_GRID {
                                g.push(ModelSpec::NeuralNet(NetParams::new(m, layers, d, b, lr)));
                            }
                        }
                    }
                }
            }
            g
        }
        Family::Logistic => vec![ModelSpec::Logistic],
        Family::Majority => vec![ModelSpec::Majority],
        Family::Random => vec![ModelSpec::Random],
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub index: usize,
    pub spec: ModelSpec,
    pub fold_auroc: Vec<f64>,
    pub mean_auroc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub family: Family,
    pub n_folds: usize,
    pub best: ModelSpec,
    pub best_mean_auroc: f64,
    /// In evaluation order.
    pub candidates: Vec<Candidate>,
}

impl SearchResult {
    /// One row per candidate: index, serialized config, fold scores, mean.
    pub fn write_candidate_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["candidate".to_string(), "config".to_string()];
        header.extend((1..=self.n_folds).map(|k| format!("fold_{k}")));
        header.push("mean_auroc".into());
        out.write_record(&header)?;
        for c in &self.candidates {
            let mut row = vec![c.index.to_string(), c.spec.serialized()];
            row.extend(c.fold_auroc.iter().map(|v| v.to_string()));
            row.push(c.mean_auroc.to_string());
            out.write_record(&row)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Picks the candidate with the highest mean AUROC; exact ties go to the
/// lexicographically smallest serialized config.
pub fn select_best(candidates: &[Candidate]) -> Option<&Candidate> {
    candidates.iter().min_by(|a, b| {
        b.mean_auroc.total_cmp(&a.mean_auroc).then_with(|| a.spec.serialized().cmp(&b.spec.serialized()))
    })
}

/// Samples `n_iter` distinct configurations from `grid` (all of them if the
/// grid is no larger) and scores each by mean validation AUROC over
/// stratified folds. Fold fits run in parallel; results are reduced in
/// (candidate, fold) order.
pub fn random_search_cv(
    x: ArrayView2<f64>,
    y: &[bool],
    family: Family,
    grid: &[ModelSpec],
    n_folds: usize,
    n_iter: usize,
    seed: u64,
) -> Result<SearchResult> {
    if grid.is_empty() {
        return Err(Error::invalid("empty tuning grid"));
    }
    if let Some(bad) = grid.iter().find(|s| s.family() != family) {
        return Err(Error::invalid(format!(
            "grid entry of family {} does not match the requested family {}",
            bad.family().as_str(),
            family.as_str()
        )));
    }
    if n_iter == 0 {
        return Err(Error::invalid("search needs at least one iteration"));
    }
    if x.nrows() != y.len() {
        return Err(Error::DimensionMismatch { expected: y.len(), actual: x.nrows() });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[0]));
    let chosen: Vec<usize> = if grid.len() <= n_iter {
        (0..grid.len()).collect()
    } else {
        sample_indices(&mut rng, grid.len(), n_iter).into_vec()
    };
    let folds = stratified_folds(y, n_folds, derive_seed(seed, &[1]))?;
    let fold_rows: Vec<(Vec<usize>, Vec<usize>)> =
        (0..n_folds).map(|k| (0..y.len()).partition(|&i| folds[i] != k)).collect();

    let tasks: Vec<(usize, usize)> = (0..chosen.len()).flat_map(|c| (0..n_folds).map(move |k| (c, k))).collect();
    let scores: Vec<Result<f64>> = tasks
        .par_iter()
        .map(|&(c, k)| {
            let (train, val) = &fold_rows[k];
            let xt = x.select(Axis(0), train);
            let yt: Vec<bool> = train.iter().map(|&i| y[i]).collect();
            let xv = x.select(Axis(0), val);
            let yv: Vec<bool> = val.iter().map(|&i| y[i]).collect();
            let config = ClassifierConfig::new(grid[chosen[c]].clone(), derive_seed(seed, &[2, c as u64, k as u64]));
            let model = fit(xt.view(), &yt, &config)?;
            let p = model.predict_proba(xv.view())?;
            auroc(&yv, &p).ok_or_else(|| Error::invalid("validation fold holds a single class"))
        })
        .collect();

    let mut candidates = Vec::with_capacity(chosen.len());
    let mut it = scores.into_iter();
    for (c, &g) in chosen.iter().enumerate() {
        let fold_auroc: Vec<f64> =
            (0..n_folds).map(|_| it.next().expect("one score per task")).collect::<Result<_>>()?;
        let mean_auroc = fold_auroc.iter().sum::<f64>() / n_folds as f64;
        candidates.push(Candidate { index: c, spec: grid[g].clone(), fold_auroc, mean_auroc });
    }
    let best = select_best(&candidates).expect("at least one candidate").clone();
    Ok(SearchResult { family, n_folds, best: best.spec, best_mean_auroc: best.mean_auroc, candidates })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_sizes() {
        assert_eq!(full_grid(Family::ElasticNet).len(), 112);
        assert_eq!(full_grid(Family::RandomForest).len(), 36);
        assert_eq!(full_grid(Family::NeuralNet).len(), 324);
        assert_eq!(full_grid(Family::Logistic).len(), 1);
    }

    #[test]
    fn tie_break_is_lexicographic() {
        let a = ModelSpec::ElasticNet(ElasticNetParams::new(0.5, 1e-4, 1.0));
        let b = ModelSpec::ElasticNet(ElasticNetParams::new(0.1, 1e-4, 1.0));
        let cands = vec![
            Candidate { index: 0, spec: a, fold_auroc: vec![0.7], mean_auroc: 0.7 },
            Candidate { index: 1, spec: b.clone(), fold_auroc: vec![0.7], mean_auroc: 0.7 },
        ];
        assert_eq!(select_best(&cands).unwrap().spec, b);
    }

    #[test]
    fn family_mismatch_rejected() {
        let x = ndarray::Array2::<f64>::zeros((20, 1));
        let y: Vec<bool> = (0..20).map(|i| i % 2 == 0).collect();
        let r = random_search_cv(x.view(), &y, Family::RandomForest, &[ModelSpec::Logistic], 2, 1, 0);
        assert!(r.is_err());
    }
}

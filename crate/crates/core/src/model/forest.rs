//! Random forest of CART trees grown on bootstrap samples.
//!
//! Each split looks at `ceil(predictor_fraction * d)` randomly chosen
//! features. A node with fewer than `min_split_size` samples becomes a
//! leaf, and no split may produce a child smaller than `min_node_size`.
//! The forest probability is the mean over trees of the positive-class
//! frequency in the leaf each tree routes the row to.

use ndarray::{ArrayView1, ArrayView2};
use rand::seq::index::sample as sample_indices;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_training_data, derive_seed, Family, FittedParams, ModelSpec, TrainedClassifier, TrainingMeta};
use crate::error::Result;

pub const PREDICTOR_FRACTION_GRID: [f64; 3] = [0.4, 0.6, 0.8];
pub const SPLIT_RULE_GRID: [SplitRule; 2] = [SplitRule::Gini, SplitRule::Entropy];
pub const MIN_NODE_SIZE_GRID: [usize; 3] = [5, 8, 10];
pub const MIN_SPLIT_SIZE_GRID: [usize; 2] = [8, 10];
pub const DEFAULT_TREES: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitRule {
    Gini,
    Entropy,
}

impl SplitRule {
    /// Impurity of a node holding `pos` positives out of `total`.
    pub fn impurity(self, pos: f64, total: f64) -> f64 {
        if total <= 0.0 {
            return 0.0;
        }
        let p = pos / total;
        let q = 1.0 - p;
        match self {
            SplitRule::Gini => 1.0 - p * p - q * q,
            SplitRule::Entropy => {
                let h = |v: f64| if v > 0.0 { -v * v.log2() } else { 0.0 };
                h(p) + h(q)
            }
        }
    }
}

fn default_trees() -> usize {
    DEFAULT_TREES
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub predictor_fraction: f64,
    pub split_rule: SplitRule,
    pub min_node_size: usize,
    pub min_split_size: usize,
    #[serde(default = "default_trees")]
    pub n_trees: usize,
}

impl ForestParams {
    pub fn new(predictor_fraction: f64, split_rule: SplitRule, min_node_size: usize, min_split_size: usize) -> Self {
        Self { predictor_fraction, split_rule, min_node_size, min_split_size, n_trees: DEFAULT_TREES }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "t", rename_all = "snake_case")]
pub enum Node {
    Leaf { positive_fraction: f64 },
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn leaf_probability(&self, row: ArrayView1<f64>) -> f64 {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf { positive_fraction } => return positive_fraction,
                Node::Split { feature, threshold, left, right } => {
                    at = if row[feature] <= threshold { left } else { right };
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub trees: Vec<Tree>,
}

impl Forest {
    pub fn predict_proba(&self, x: ArrayView2<f64>) -> Vec<f64> {
        let n_trees = self.trees.len() as f64;
        x.rows()
            .into_iter()
            .map(|row| self.trees.iter().map(|t| t.leaf_probability(row)).sum::<f64>() / n_trees)
            .collect()
    }
}

struct Grower<'a> {
    x: ArrayView2<'a, f64>,
    y: &'a [bool],
    params: &'a ForestParams,
    n_candidates: usize,
    nodes: Vec<Node>,
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    score: f64,
}

impl Grower<'_> {
    fn leaf(&mut self, samples: &[usize]) -> usize {
        let pos = samples.iter().filter(|&&i| self.y[i]).count() as f64;
        self.nodes.push(Node::Leaf { positive_fraction: pos / samples.len() as f64 });
        self.nodes.len() - 1
    }

    fn best_split(&self, samples: &[usize], rng: &mut ChaCha8Rng) -> Option<BestSplit> {
        let d = self.x.ncols();
        let total = samples.len() as f64;
        let total_pos = samples.iter().filter(|&&i| self.y[i]).count() as f64;
        let min_child = self.params.min_node_size.max(1);
        let mut best: Option<BestSplit> = None;
        let mut pairs: Vec<(f64, bool)> = Vec::with_capacity(samples.len());
        let mut features = sample_indices(rng, d, self.n_candidates).into_vec();
        features.sort_unstable();
        for feature in features {
            pairs.clear();
            pairs.extend(samples.iter().map(|&i| (self.x[[i, feature]], self.y[i])));
            pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut left_pos = 0.0;
            for k in 0..pairs.len() - 1 {
                if pairs[k].1 {
                    left_pos += 1.0;
                }
                let n_left = k + 1;
                if pairs[k].0 == pairs[k + 1].0 || n_left < min_child || pairs.len() - n_left < min_child {
                    continue;
                }
                let nl = n_left as f64;
                let nr = total - nl;
                let score = nl * self.params.split_rule.impurity(left_pos, nl)
                    + nr * self.params.split_rule.impurity(total_pos - left_pos, nr);
                if best.as_ref().is_none_or(|b| score < b.score) {
                    best = Some(BestSplit { feature, threshold: 0.5 * (pairs[k].0 + pairs[k + 1].0), score });
                }
            }
        }
        best
    }

    fn grow(&mut self, samples: Vec<usize>, rng: &mut ChaCha8Rng) -> usize {
        let pos = samples.iter().filter(|&&i| self.y[i]).count();
        let pure = pos == 0 || pos == samples.len();
        if pure || samples.len() < self.params.min_split_size {
            return self.leaf(&samples);
        }
        let Some(split) = self.best_split(&samples, rng) else {
            return self.leaf(&samples);
        };
        let (left, right): (Vec<usize>, Vec<usize>) =
            samples.iter().partition(|&&i| self.x[[i, split.feature]] <= split.threshold);
        let at = self.nodes.len();
        self.nodes.push(Node::Leaf { positive_fraction: f64::NAN });
        let l = self.grow(left, rng);
        let r = self.grow(right, rng);
        self.nodes[at] = Node::Split { feature: split.feature, threshold: split.threshold, left: l, right: r };
        at
    }
}

/// Grows one tree on a bootstrap sample; returns the tree and its in-bag mask.
fn grow_tree(
    x: ArrayView2<f64>,
    y: &[bool],
    params: &ForestParams,
    n_candidates: usize,
    seed: u64,
) -> (Tree, Vec<bool>) {
    let n = x.nrows();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
    let mut in_bag = vec![false; n];
    for &i in &samples {
        in_bag[i] = true;
    }
    let mut grower = Grower { x, y, params, n_candidates, nodes: Vec::new() };
    grower.grow(samples, &mut rng);
    (Tree { nodes: grower.nodes }, in_bag)
}

/// Fits a forest. A single-class target is accepted: every leaf then
/// predicts that class with probability 1.
pub fn fit_random_forest(
    x: ArrayView2<f64>,
    y: &[bool],
    params: &ForestParams,
    seed: u64,
) -> Result<TrainedClassifier> {
    check_training_data(x, y, false)?;
    if !(params.predictor_fraction > 0.0 && params.predictor_fraction <= 1.0) {
        return Err(crate::Error::invalid("predictor_fraction must lie in (0, 1]"));
    }
    if params.n_trees == 0 {
        return Err(crate::Error::invalid("a forest needs at least one tree"));
    }
    let d = x.ncols();
    let n_candidates = ((params.predictor_fraction * d as f64).ceil() as usize).clamp(1, d.max(1));

    let grown: Vec<(Tree, Vec<bool>)> = (0..params.n_trees)
        .into_par_iter()
        .map(|t| grow_tree(x, y, params, n_candidates, derive_seed(seed, &[t as u64])))
        .collect();

    // out-of-bag accuracy at threshold 0.5
    let mut oob_sum = vec![0.0; x.nrows()];
    let mut oob_count = vec![0usize; x.nrows()];
    for (tree, in_bag) in &grown {
        for (i, row) in x.rows().into_iter().enumerate() {
            if !in_bag[i] {
                oob_sum[i] += tree.leaf_probability(row);
                oob_count[i] += 1;
            }
        }
    }
    let scored: Vec<bool> = (0..x.nrows())
        .filter(|&i| oob_count[i] > 0)
        .map(|i| (oob_sum[i] / oob_count[i] as f64 >= 0.5) == y[i])
        .collect();
    let oob_accuracy = (!scored.is_empty()).then(|| scored.iter().filter(|&&c| c).count() as f64 / scored.len() as f64);

    Ok(TrainedClassifier {
        family: Family::RandomForest,
        spec: ModelSpec::RandomForest(params.clone()),
        width: d,
        layout_fingerprint: None,
        seed,
        meta: TrainingMeta {
            iterations: params.n_trees,
            stop_reason: "all_trees_grown".into(),
            oob_accuracy,
            ..Default::default()
        },
        params: FittedParams::Forest(Forest { trees: grown.into_iter().map(|(t, _)| t).collect() }),
    })
}

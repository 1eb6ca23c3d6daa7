//! Final classifiers: logistic regression, elastic net, random forest,
//! a feed-forward network, and two naive baselines.
//!
//! Every fit is deterministic given `(x, y, config)`; fitted models are
//! immutable and emit success probabilities in `[0, 1]`.

mod baseline;
pub mod elastic_net;
pub mod forest;
mod io;
pub mod linear;
pub mod neural;

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

pub use baseline::{fit_baseline, BaselineKind};
pub use elastic_net::{fit_elastic_net, ElasticNetParams};
pub use forest::{fit_random_forest, Forest, ForestParams, SplitRule};
pub use io::{load, load_from_path, save, save_to_path, FORMAT_VERSION};
pub use linear::{fit_logistic, LinearModel};
pub use neural::{fit_neural_net, hidden_width, Mlp, NetParams};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Logistic,
    ElasticNet,
    RandomForest,
    NeuralNet,
    Majority,
    Random,
}

impl Family {
    pub fn as_str(self) -> &'static str {
        match self {
            Family::Logistic => "logistic",
            Family::ElasticNet => "elastic_net",
            Family::RandomForest => "random_forest",
            Family::NeuralNet => "neural_net",
            Family::Majority => "majority",
            Family::Random => "random",
        }
    }
}

impl std::str::FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_owned()))
            .map_err(|_| Error::invalid(format!("unknown classifier family {s:?}")))
    }
}

/// Family plus its hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ModelSpec {
    Logistic,
    ElasticNet(ElasticNetParams),
    RandomForest(ForestParams),
    NeuralNet(NetParams),
    Majority,
    Random,
}

impl ModelSpec {
    pub fn family(&self) -> Family {
        match self {
            ModelSpec::Logistic => Family::Logistic,
            ModelSpec::ElasticNet(_) => Family::ElasticNet,
            ModelSpec::RandomForest(_) => Family::RandomForest,
            ModelSpec::NeuralNet(_) => Family::NeuralNet,
            ModelSpec::Majority => Family::Majority,
            ModelSpec::Random => Family::Random,
        }
    }

    /// Canonical JSON used for logging and tie-breaking.
    pub fn serialized(&self) -> String {
        serde_json::to_string(self).expect("model specs always serialize")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierConfig {
    pub spec: ModelSpec,
    pub seed: u64,
}

impl ClassifierConfig {
    pub fn new(spec: ModelSpec, seed: u64) -> Self {
        Self { spec, seed }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FittedParams {
    Linear(LinearModel),
    Forest(Forest),
    Net(Mlp),
    Constant { probability: f64 },
    Random { prevalence: f64, seed: u64 },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    /// Iterations for linear models, epochs for the network.
    pub iterations: usize,
    pub stop_reason: String,
    /// Step-size constant of the gradient fits.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lipschitz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub best_validation_loss: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oob_accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedClassifier {
    pub family: Family,
    pub spec: ModelSpec,
    pub width: usize,
    #[serde(default)]
    pub layout_fingerprint: Option<String>,
    pub seed: u64,
    pub meta: TrainingMeta,
    pub params: FittedParams,
}

/// Anything that maps rows of a feature matrix to probabilities.
pub trait Predictor: Sync {
    fn width(&self) -> usize;
    fn predict_proba(&self, x: ArrayView2<f64>) -> Result<Vec<f64>>;
}

impl TrainedClassifier {
    pub fn with_layout_fingerprint(mut self, fp: impl Into<String>) -> Self {
        self.layout_fingerprint = Some(fp.into());
        self
    }
}

impl Predictor for TrainedClassifier {
    fn width(&self) -> usize {
        self.width
    }

    fn predict_proba(&self, x: ArrayView2<f64>) -> Result<Vec<f64>> {
        if x.ncols() != self.width {
            return Err(Error::WidthMismatch { expected: self.width, actual: x.ncols() });
        }
        Ok(match &self.params {
            FittedParams::Linear(m) => m.predict_proba(x),
            FittedParams::Forest(f) => f.predict_proba(x),
            FittedParams::Net(n) => n.predict_proba(x),
            FittedParams::Constant { probability } => vec![*probability; x.nrows()],
            FittedParams::Random { prevalence, seed } => baseline::random_scores(*prevalence, *seed, x.nrows()),
        })
    }
}

pub(crate) fn check_training_data(x: ArrayView2<f64>, y: &[bool], require_both: bool) -> Result<()> {
    if x.nrows() != y.len() {
        return Err(Error::invalid(format!("{} rows but {} labels", x.nrows(), y.len())));
    }
    if y.is_empty() {
        return Err(Error::invalid("empty training set"));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("non-finite value in training matrix"));
    }
    if require_both && (y.iter().all(|&b| b) || y.iter().all(|&b| !b)) {
        return Err(Error::SingleClass);
    }
    Ok(())
}

/// Fits whatever family `config.spec` names.
pub fn fit(x: ArrayView2<f64>, y: &[bool], config: &ClassifierConfig) -> Result<TrainedClassifier> {
    match &config.spec {
        ModelSpec::Logistic => fit_logistic(x, y, config.seed),
        ModelSpec::ElasticNet(p) => fit_elastic_net(x, y, p, config.seed),
        ModelSpec::RandomForest(p) => fit_random_forest(x, y, p, config.seed),
        ModelSpec::NeuralNet(p) => fit_neural_net(x, y, p, config.seed),
        ModelSpec::Majority => fit_baseline(x.ncols(), y, BaselineKind::Majority, config.seed),
        ModelSpec::Random => fit_baseline(x.ncols(), y, BaselineKind::Random, config.seed),
    }
}

/// Stable 64-bit mix of a seed with task indices (splitmix64 finaliser).
pub fn derive_seed(seed: u64, indices: &[u64]) -> u64 {
    let mut h = seed ^ 0x9E37_79B9_7F4A_7C15;
    for &i in indices {
        h = h.wrapping_add(i.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        h = (h ^ (h >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        h = (h ^ (h >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        h ^= h >> 31;
    }
    h
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^z)` without overflow.
pub(crate) fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

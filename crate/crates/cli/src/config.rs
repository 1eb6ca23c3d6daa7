//! The run configuration file and its validation.

use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use vfuse_core::eval::{ClassifierChoice, Grouping, RoiParams, SplitMode, SplitPlan, DEFAULT_MIN_SUPPORT};
use vfuse_core::explain::{Granularity, ShapMode, DEFAULT_BACKGROUND, DEFAULT_SAMPLES};
use vfuse_core::model::{ElasticNetParams, Family, ForestParams, ModelSpec, NetParams, SplitRule};
use vfuse_core::pipeline::{FeatureConfig, InputMode};
use vfuse_core::profile::DEFAULT_HORIZON_MONTHS;
use vfuse_core::text::{ServiceConfig, TextKind, DEFAULT_MIN_DOC_FRACTION};

use crate::CliError;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Paths {
    #[serde(default)]
    pub profiles: Option<PathBuf>,
    #[serde(default)]
    pub embedding_cache: Option<PathBuf>,
    #[serde(default)]
    pub embedding_service: Option<String>,
    #[serde(default)]
    pub word_vectors: Option<PathBuf>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShapSettings {
    pub mode: ShapMode,
    pub granularity: Granularity,
    pub n_samples: usize,
    pub background: usize,
    /// Test rows to explain.
    pub rows: usize,
}

impl Default for ShapSettings {
    fn default() -> Self {
        Self {
            mode: ShapMode::Sampled,
            granularity: Granularity::Block,
            n_samples: DEFAULT_SAMPLES,
            background: DEFAULT_BACKGROUND,
            rows: 50,
        }
    }
}

fn default_cutoff() -> NaiveDate {
    NaiveDate::from_ymd_opt(2015, 12, 31).expect("valid date")
}
fn default_horizon() -> i32 {
    DEFAULT_HORIZON_MONTHS
}
fn default_mode() -> InputMode {
    InputMode::FvTsd
}
fn default_kind() -> TextKind {
    TextKind::DocEmbedding
}
fn default_classifier() -> ClassifierChoice {
    ClassifierChoice::Fixed { spec: default_spec(Family::ElasticNet) }
}
fn default_threshold() -> f64 {
    0.5
}
fn default_seed() -> u64 {
    42
}
fn default_min_support() -> usize {
    DEFAULT_MIN_SUPPORT
}
fn default_fraction() -> f64 {
    DEFAULT_MIN_DOC_FRACTION
}

/// Repeated-split settings; the seed lives at the top level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitSettings {
    pub mode: SplitMode,
    pub train_fraction: f64,
    pub n_repeats: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cutoff_date: Option<NaiveDate>,
}

impl Default for SplitSettings {
    fn default() -> Self {
        let p = SplitPlan::default();
        Self { mode: p.mode, train_fraction: p.train_fraction, n_repeats: p.n_repeats, cutoff_date: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub paths: Paths,
    #[serde(default = "default_cutoff")]
    pub cutoff: NaiveDate,
    #[serde(default = "default_horizon")]
    pub horizon_months: i32,
    #[serde(default = "default_mode")]
    pub mode: InputMode,
    #[serde(default = "default_kind")]
    pub text_kind: TextKind,
    #[serde(default = "default_fraction")]
    pub min_doc_fraction: f64,
    #[serde(default = "default_classifier")]
    pub classifier: ClassifierChoice,
    #[serde(default)]
    pub split: SplitSettings,
    #[serde(default)]
    pub roi: RoiParams,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default)]
    pub groupings: Vec<Grouping>,
    #[serde(default = "default_min_support")]
    pub min_support: usize,
    #[serde(default)]
    pub shap: ShapSettings,
    /// Master seed; every other seed is derived from it.
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Worker threads; all processors when unset. Not part of the hash.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("every field has a default")
    }
}

/// Default hyperparameters when a family is named without a grid search.
pub fn default_spec(family: Family) -> ModelSpec {
    match family {
        Family::Logistic => ModelSpec::Logistic,
        Family::ElasticNet => ModelSpec::ElasticNet(ElasticNetParams::new(0.1, 1e-4, 0.1)),
        Family::RandomForest => ModelSpec::RandomForest(ForestParams::new(0.6, SplitRule::Gini, 5, 8)),
        Family::NeuralNet => ModelSpec::NeuralNet(NetParams::new(1.0, 2, 0.2, 256, 1e-3)),
        Family::Majority => ModelSpec::Majority,
        Family::Random => ModelSpec::Random,
    }
}

fn invalid(key: &str, message: impl Into<String>) -> CliError {
    CliError::Config { key: key.into(), message: message.into() }
}

fn must_exist(key: &str, path: &Option<PathBuf>) -> Result<(), CliError> {
    match path {
        Some(p) if !p.exists() => Err(invalid(key, format!("{} does not exist", p.display()))),
        _ => Ok(()),
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| invalid("config", format!("cannot read {}: {e}", path.display())))?;
        let mut cfg: RunConfig =
            serde_json::from_str(&text).map_err(|e| invalid("config", format!("{}: {e}", path.display())))?;
        // relative paths are taken from the config file's directory
        let base = path.parent().unwrap_or(Path::new("."));
        let rebase = |p: &mut Option<PathBuf>| {
            if let Some(inner) = p.as_mut() {
                if inner.is_relative() {
                    *inner = base.join(&*inner);
                }
            }
        };
        rebase(&mut cfg.paths.profiles);
        rebase(&mut cfg.paths.embedding_cache);
        rebase(&mut cfg.paths.word_vectors);
        rebase(&mut cfg.paths.output_dir);
        Ok(cfg)
    }

    pub fn plan(&self) -> SplitPlan {
        SplitPlan {
            mode: self.split.mode,
            train_fraction: self.split.train_fraction,
            n_repeats: self.split.n_repeats,
            master_seed: self.seed,
            cutoff_date: self.split.cutoff_date,
        }
    }

    pub fn features(&self) -> FeatureConfig {
        FeatureConfig {
            min_doc_fraction: self.min_doc_fraction,
            ..FeatureConfig::new(self.mode, self.text_kind, self.cutoff)
        }
    }

    pub fn service(&self) -> Option<ServiceConfig> {
        self.paths.embedding_service.as_ref().map(|url| {
            let mut s = ServiceConfig::new(url.clone());
            s.cache_path = self.paths.embedding_cache.clone();
            s
        })
    }

    pub fn output_dir(&self) -> PathBuf {
        self.paths.output_dir.clone().unwrap_or_else(|| PathBuf::from("vfuse-out"))
    }

    /// Checks everything a pipeline command needs before any work starts.
    pub fn validate(&self) -> Result<(), CliError> {
        match &self.paths.profiles {
            None => return Err(invalid("paths.profiles", "no profiles file given")),
            Some(p) if !p.exists() => return Err(invalid("paths.profiles", format!("{} does not exist", p.display()))),
            _ => {}
        }
        if self.paths.embedding_service.is_none() {
            must_exist("paths.embedding_cache", &self.paths.embedding_cache)?;
        }
        must_exist("paths.word_vectors", &self.paths.word_vectors)?;
        if self.mode.uses_text() {
            match self.text_kind {
                TextKind::DocEmbedding
                    if self.paths.embedding_cache.is_none() && self.paths.embedding_service.is_none() =>
                {
                    return Err(invalid(
                        "paths.embedding_cache",
                        "document embeddings need an embedding cache or an embedding service",
                    ))
                }
                TextKind::WordAvg if self.paths.word_vectors.is_none() => {
                    return Err(invalid("paths.word_vectors", "word averaging needs a word-vector table"))
                }
                _ => {}
            }
        }
        if self.horizon_months <= 0 {
            return Err(invalid("horizon_months", "must be positive"));
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(invalid("threshold", "must lie in [0, 1]"));
        }
        if !(0.0..1.0).contains(&self.min_doc_fraction) {
            return Err(invalid("min_doc_fraction", "must lie in [0, 1)"));
        }
        if let ClassifierChoice::Tune { n_iter, n_folds, .. } = self.classifier {
            if n_iter == 0 {
                return Err(invalid("classifier.n_iter", "must be positive"));
            }
            if n_folds < 2 {
                return Err(invalid("classifier.n_folds", "need at least 2 folds"));
            }
        }
        if self.shap.n_samples == 0 || self.shap.background == 0 {
            return Err(invalid("shap", "n_samples and background must be positive"));
        }
        if self.workers == Some(0) {
            return Err(invalid("workers", "must be positive"));
        }
        self.roi.validate().map_err(|e| invalid("roi", e.to_string()))?;
        self.plan().validate()?;
        Ok(())
    }

    /// SHA-256 of the canonical JSON, ignoring the output location and the
    /// worker count (neither changes results).
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.paths.output_dir = None;
        canonical.workers = None;
        let bytes = serde_json::to_vec(&canonical).expect("config serializes");
        Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
    }
}

//! Command-line driver: argument parsing, config resolution and exit codes.

pub mod commands;
pub mod config;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;
use vfuse_core::eval::ClassifierChoice;
use vfuse_core::model::Family;
use vfuse_core::pipeline::InputMode;
use vfuse_core::text::TextKind;

pub use config::RunConfig;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error in `{key}`: {message}")]
    Config { key: String, message: String },

    #[error(transparent)]
    Pipeline(vfuse_core::Error),

    #[error("{0}")]
    Io(#[from] std::io::Error),

    #[error("{0}")]
    Failed(String),
}

impl From<vfuse_core::Error> for CliError {
    fn from(e: vfuse_core::Error) -> Self {
        match e {
            vfuse_core::Error::Config { key, message } => CliError::Config { key, message },
            other => CliError::Pipeline(other),
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Pipeline(e.into())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Pipeline(e.into())
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "vfuse", version, about = "Startup-success prediction from fundamentals and self-descriptions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic dataset with an embedding cache and a starter config.
    Synth(SynthArgs),
    /// Fit the featurizer on all labeled rows and export the feature matrix.
    Featurize(RunArgs),
    /// Randomized-search cross-validation on the training split.
    Tune(RunArgs),
    /// Fit on the training split, save the model and report test metrics.
    Train(RunArgs),
    /// Repeated split / fit / evaluate with subgroup reports.
    Evaluate(RunArgs),
    /// Shapley attributions for test rows.
    Explain(RunArgs),
    /// Paired test on two prediction files.
    Mcnemar(McNemarArgs),
    /// Run the acceptance suite.
    Accept(AcceptArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 2000)]
    pub n: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

/// Flags shared by the pipeline commands; each overrides the config key of the same name.
#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub profiles: Option<PathBuf>,
    /// Embedding cache file.
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    #[arg(long, env = "VFUSE_EMBED_URL")]
    pub embed_url: Option<String>,
    #[arg(long)]
    pub word_vectors: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// fv, tsd or fv+tsd.
    #[arg(long)]
    pub mode: Option<String>,
    /// manual10, bow, word_avg or doc_embedding.
    #[arg(long)]
    pub text_kind: Option<String>,
    /// Fixed classifier with default hyperparameters.
    #[arg(long, conflicts_with = "tune")]
    pub classifier: Option<String>,
    /// Randomized search over this family's grid.
    #[arg(long)]
    pub tune: Option<String>,
    #[arg(long, requires = "tune")]
    pub n_iter: Option<usize>,
    #[arg(long, requires = "tune")]
    pub folds: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub repeats: Option<usize>,
    #[arg(long)]
    pub cutoff: Option<String>,
    #[arg(long, env = "VFUSE_WORKERS")]
    pub workers: Option<usize>,
    #[arg(long)]
    pub threshold: Option<f64>,
}

#[derive(Debug, Args)]
pub struct McNemarArgs {
    /// Predictions of model A (`predictions.csv` from evaluate).
    pub a: PathBuf,
    /// Predictions of model B.
    pub b: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub repeat: usize,
    #[arg(long, default_value_t = 0.5)]
    pub threshold: f64,
    /// Writes mcnemar.json here as well as printing it.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AcceptArgs {
    /// Smaller sample sizes; same tolerances.
    #[arg(long)]
    pub quick: bool,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value = "vfuse-out")]
    pub out: PathBuf,
    #[arg(long, env = "VFUSE_WORKERS")]
    pub workers: Option<usize>,
}

fn parse_value<T: serde::de::DeserializeOwned>(key: &str, raw: &str, expected: &str) -> Result<T, CliError> {
    serde_json::from_value(serde_json::Value::String(raw.to_string())).map_err(|_| CliError::Config {
        key: key.into(),
        message: format!("unknown value {raw:?} (expected {expected})"),
    })
}

fn parse_family(key: &str, raw: &str) -> Result<Family, CliError> {
    parse_value(key, raw, "logistic, elastic_net, random_forest, neural_net, majority or random")
}

/// Config file (if any) with flag overrides applied.
pub fn resolve_config(args: &RunArgs) -> Result<RunConfig, CliError> {
    let mut cfg = match &args.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(p) = &args.profiles {
        cfg.paths.profiles = Some(p.clone());
    }
    if let Some(p) = &args.embeddings {
        cfg.paths.embedding_cache = Some(p.clone());
    }
    if let Some(u) = &args.embed_url {
        cfg.paths.embedding_service = Some(u.clone());
    }
    if let Some(p) = &args.word_vectors {
        cfg.paths.word_vectors = Some(p.clone());
    }
    if let Some(p) = &args.out {
        cfg.paths.output_dir = Some(p.clone());
    }
    if let Some(m) = &args.mode {
        cfg.mode =
            m.parse::<InputMode>().map_err(|e| CliError::Config { key: "mode".into(), message: e.to_string() })?;
    }
    if let Some(k) = &args.text_kind {
        cfg.text_kind = parse_value::<TextKind>("text_kind", k, "manual10, bow, word_avg or doc_embedding")?;
    }
    if let Some(f) = &args.classifier {
        cfg.classifier = ClassifierChoice::Fixed { spec: config::default_spec(parse_family("classifier", f)?) };
    }
    if let Some(f) = &args.tune {
        let mut choice = ClassifierChoice::tune(parse_family("classifier.family", f)?);
        if let ClassifierChoice::Tune { n_iter, n_folds, .. } = &mut choice {
            *n_iter = args.n_iter.unwrap_or(*n_iter);
            *n_folds = args.folds.unwrap_or(*n_folds);
        }
        cfg.classifier = choice;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(r) = args.repeats {
        cfg.split.n_repeats = r;
    }
    if let Some(c) = &args.cutoff {
        cfg.cutoff = c
            .parse()
            .map_err(|e| CliError::Config { key: "cutoff".into(), message: format!("{c:?} is not a date: {e}") })?;
    }
    if let Some(w) = args.workers {
        cfg.workers = Some(w);
    }
    if let Some(t) = args.threshold {
        cfg.threshold = t;
    }
    Ok(cfg)
}

/// Parses `argv` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    match commands::dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

//! One function per subcommand. Pipeline commands write into
//! `<output_dir>/run-<hash12>/` alongside a `manifest.json`.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use log::{info, warn};
use ndarray::Array2;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use vfuse_core::acceptance::{run_acceptance, SuiteConfig};
use vfuse_core::eval::{
    compute_metrics, fit_choice, full_grid, mcnemar_test, out_of_time_split, random_search_cv, repeated_experiment,
    stratified_split, ClassifierChoice, ExperimentConfig, MetricsReport, Partition, SearchSummary, SplitMode,
};
use vfuse_core::explain::{explain_rows, sample_background, write_attributions_csv, ExplanationSummary, ShapConfig};
use vfuse_core::features::export_feature_matrix;
use vfuse_core::model::{derive_seed, save_to_path, ModelSpec, Predictor, TrainedClassifier, FORMAT_VERSION};
use vfuse_core::pipeline::{Featurizer, TextResources};
use vfuse_core::profile::{parse_profiles, prepare_dataset, LabeledProfile, StartupProfile};
use vfuse_core::synth::{generate_synthetic, SynthConfig};
use vfuse_core::text::{
    get_document_embeddings, read_embedding_cache, EmbeddingGateway, TextKind, WordVectorTable, WORD_VECTOR_DIM,
};

use crate::config::RunConfig;
use crate::{AcceptArgs, CliError, Command, McNemarArgs, RunArgs, SynthArgs};

type Result<T> = std::result::Result<T, CliError>;

pub fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Synth(a) => synth(&a),
        Command::Featurize(a) => pipeline("featurize", &a, featurize),
        Command::Tune(a) => pipeline("tune", &a, tune),
        Command::Train(a) => pipeline("train", &a, train),
        Command::Evaluate(a) => pipeline("evaluate", &a, evaluate),
        Command::Explain(a) => pipeline("explain", &a, explain),
        Command::Mcnemar(a) => mcnemar(&a),
        Command::Accept(a) => accept(&a),
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// JSON artifact body tagged with the hash of the config that produced it.
#[derive(Serialize)]
struct Stamped<'a, T: Serialize> {
    config_hash: &'a str,
    #[serde(flatten)]
    body: &'a T,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct OutputFile {
    pub file: String,
    pub sha256: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub config_hash: String,
    /// Seconds since the Unix epoch, RFC 3339. The only field that changes between identical runs.
    pub created_at: String,
    pub seeds: serde_json::Value,
    pub versions: serde_json::Value,
    pub config: serde_json::Value,
    pub outputs: Vec<OutputFile>,
}

/// An output directory plus the files written into it so far.
struct RunDir {
    path: PathBuf,
    hash: String,
    outputs: Vec<String>,
}

impl RunDir {
    fn create(root: &Path, hash: String) -> Result<Self> {
        let path = root.join(format!("run-{}", &hash[..12]));
        std::fs::create_dir_all(&path)?;
        Ok(Self { path, hash, outputs: Vec::new() })
    }

    fn file(&mut self, name: &str) -> PathBuf {
        if !self.outputs.iter().any(|o| o == name) {
            self.outputs.push(name.to_string());
        }
        self.path.join(name)
    }

    fn write_json<T: Serialize>(&mut self, name: &str, body: &T) -> Result<()> {
        let path = self.file(name);
        let mut bytes = serde_json::to_vec_pretty(&Stamped { config_hash: &self.hash, body })?;
        bytes.push(b'\n');
        std::fs::write(path, bytes)?;
        Ok(())
    }

    fn finish(self, command: &str, config: serde_json::Value, seeds: serde_json::Value) -> Result<PathBuf> {
        let outputs = self
            .outputs
            .iter()
            .map(|name| {
                let bytes = std::fs::read(self.path.join(name))?;
                Ok(OutputFile { file: name.clone(), sha256: sha256_hex(&bytes) })
            })
            .collect::<Result<Vec<_>>>()?;
        let manifest = Manifest {
            command: command.to_string(),
            config_hash: self.hash.clone(),
            created_at: timestamp(),
            seeds,
            versions: serde_json::json!({
                "vfuse": env!("CARGO_PKG_VERSION"),
                "model_format": FORMAT_VERSION,
            }),
            config,
            outputs,
        };
        let mut bytes = serde_json::to_vec_pretty(&manifest)?;
        bytes.push(b'\n');
        std::fs::write(self.path.join("manifest.json"), bytes)?;
        info!("{command}: wrote {} file(s) to {}", manifest.outputs.len(), self.path.display());
        Ok(self.path)
    }
}

fn timestamp() -> String {
    let secs = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs() as i64).unwrap_or(0);
    chrono::DateTime::from_timestamp(secs, 0).map(|t| t.to_rfc3339()).unwrap_or_default()
}

fn thread_pool(workers: Option<usize>) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Failed(format!("cannot start worker pool: {e}")))
}

/// Everything a pipeline command reads from disk.
struct Inputs {
    data: Vec<LabeledProfile>,
    res: TextResources,
}

impl Inputs {
    fn labels(&self) -> Vec<bool> {
        self.data.iter().map(|d| d.label.is_positive()).collect()
    }

    fn profiles(&self, rows: &[usize]) -> Vec<&StartupProfile> {
        rows.iter().map(|&i| &self.data[i].profile).collect()
    }

    fn ids(&self, rows: &[usize]) -> Vec<String> {
        rows.iter().map(|&i| self.data[i].profile.id.clone()).collect()
    }
}

fn load_inputs(cfg: &RunConfig) -> Result<Inputs> {
    let path = cfg.paths.profiles.as_ref().expect("validated");
    let (raw, diagnostics) = parse_profiles(BufReader::new(File::open(path)?), false)?;
    for d in diagnostics.iter().take(5) {
        warn!("{}: line {}: {}", path.display(), d.line, d.message);
    }
    if diagnostics.len() > 5 {
        warn!("{} more malformed line(s) skipped", diagnostics.len() - 5);
    }
    let (data, dropped) = prepare_dataset(&raw, cfg.cutoff, cfg.horizon_months);
    if !dropped.is_empty() {
        info!("{} profile(s) excluded at cutoff {}", dropped.len(), cfg.cutoff);
    }
    if data.is_empty() {
        return Err(CliError::Failed(format!("no usable profiles in {}", path.display())));
    }
    info!("{} profiles, {} positive", data.len(), data.iter().filter(|d| d.label.is_positive()).count());

    let mut res = TextResources::default();
    if cfg.mode.uses_text() {
        match cfg.text_kind {
            TextKind::DocEmbedding => {
                res.embeddings = Some(match cfg.service() {
                    Some(service) => {
                        let items: Vec<(String, String)> =
                            data.iter().map(|d| (d.profile.id.clone(), d.profile.description.clone())).collect();
                        let (reps, _) = get_document_embeddings(&items, &EmbeddingGateway::Service(service))?;
                        items.into_iter().zip(reps).map(|((id, _), r)| (id, r.values)).collect::<HashMap<_, _>>()
                    }
                    None => read_embedding_cache(cfg.paths.embedding_cache.as_ref().expect("validated"))?,
                });
            }
            TextKind::WordAvg => {
                let path = cfg.paths.word_vectors.as_ref().expect("validated");
                res.word_vectors = Some(WordVectorTable::read(BufReader::new(File::open(path)?), WORD_VECTOR_DIM)?);
            }
            TextKind::Manual10 | TextKind::Bow => {}
        }
    }
    Ok(Inputs { data, res })
}

/// The single train/test split used by `tune`, `train` and `explain`:
/// repeat 0 of the configured plan.
fn holdout(inputs: &Inputs, cfg: &RunConfig) -> Result<Partition> {
    let plan = cfg.plan();
    Ok(match plan.mode {
        SplitMode::StratifiedRandom => stratified_split(&inputs.labels(), &plan, 0)?,
        SplitMode::OutOfTime => {
            let founded: Vec<_> = inputs.data.iter().map(|d| d.profile.founded_on).collect();
            out_of_time_split(&founded, plan.cutoff_date.expect("validated"))?
        }
    })
}

fn model_seed(cfg: &RunConfig) -> u64 {
    derive_seed(cfg.seed, &[0])
}

struct Fitted {
    part: Partition,
    featurizer: Featurizer,
    x_train: Array2<f64>,
    y_train: Vec<bool>,
}

fn fit_features(inputs: &Inputs, cfg: &RunConfig) -> Result<Fitted> {
    let part = holdout(inputs, cfg)?;
    let y = inputs.labels();
    let (featurizer, x_train) = Featurizer::fit(&inputs.profiles(&part.train), &cfg.features(), &inputs.res)?;
    let y_train = part.train.iter().map(|&i| y[i]).collect();
    Ok(Fitted { part, featurizer, x_train, y_train })
}

fn pipeline(name: &str, args: &RunArgs, body: fn(&RunConfig, &Inputs, &mut RunDir) -> Result<()>) -> Result<()> {
    let cfg = crate::resolve_config(args)?;
    cfg.validate()?;
    let pool = thread_pool(cfg.workers)?;
    let mut dir = RunDir::create(&cfg.output_dir(), cfg.hash())?;
    pool.install(|| {
        let inputs = load_inputs(&cfg)?;
        body(&cfg, &inputs, &mut dir)
    })?;
    dir.write_json("config.json", &cfg)?;
    let seeds = serde_json::json!({ "master": cfg.seed, "model": model_seed(&cfg) });
    let path = dir.finish(name, serde_json::to_value(&cfg)?, seeds)?;
    println!("{}", path.display());
    Ok(())
}

fn featurize(cfg: &RunConfig, inputs: &Inputs, dir: &mut RunDir) -> Result<()> {
    let all: Vec<usize> = (0..inputs.data.len()).collect();
    let (featurizer, x) = Featurizer::fit(&inputs.profiles(&all), &cfg.features(), &inputs.res)?;
    let ids = inputs.ids(&all);
    export_feature_matrix(&dir.file("features.csv"), &ids, x.view(), &featurizer.layout)?;
    dir.file("features.layout.json");
    let mut labels = csv::Writer::from_path(dir.file("labels.csv"))?;
    labels.write_record(["id", "label"])?;
    for (id, d) in ids.iter().zip(&inputs.data) {
        labels.write_record([id.as_str(), &d.label.value().to_string()])?;
    }
    labels.flush()?;
    dir.write_json("featurizer.json", &featurizer)?;
    Ok(())
}

fn tune(cfg: &RunConfig, inputs: &Inputs, dir: &mut RunDir) -> Result<()> {
    let ClassifierChoice::Tune { family, n_iter, n_folds } = cfg.classifier else {
        return Err(CliError::Config {
            key: "classifier".into(),
            message: "tune needs a family to search: pass --tune FAMILY or set strategy \"tune\"".into(),
        });
    };
    let f = fit_features(inputs, cfg)?;
    // same seed fit_choice uses, so `train` picks the same winner
    let seed = derive_seed(model_seed(cfg), &[0]);
    let result = random_search_cv(f.x_train.view(), &f.y_train, family, &full_grid(family), n_folds, n_iter, seed)?;
    info!("best mean validation AUROC {:.4}: {}", result.best_mean_auroc, result.best.serialized());
    result.write_candidate_csv(BufWriter::new(File::create(dir.file("search_candidates.csv"))?))?;
    dir.write_json("search.json", &result)?;
    Ok(())
}

#[derive(Serialize)]
struct TrainSummary<'a> {
    spec: &'a ModelSpec,
    #[serde(skip_serializing_if = "Option::is_none")]
    search: Option<SearchSummary>,
    n_train: usize,
    n_test: usize,
    test_metrics: MetricsReport,
}

fn fit_model(cfg: &RunConfig, inputs: &Inputs) -> Result<(Fitted, TrainedClassifier, Option<SearchSummary>)> {
    let f = fit_features(inputs, cfg)?;
    let (model, search) = fit_choice(f.x_train.view(), &f.y_train, &cfg.classifier, model_seed(cfg))?;
    let model = model.with_layout_fingerprint(f.featurizer.layout.fingerprint());
    Ok((f, model, search))
}

fn train(cfg: &RunConfig, inputs: &Inputs, dir: &mut RunDir) -> Result<()> {
    let (f, model, search) = fit_model(cfg, inputs)?;
    let x_test = f.featurizer.transform(&inputs.profiles(&f.part.test), &inputs.res)?;
    let y = inputs.labels();
    let y_test: Vec<bool> = f.part.test.iter().map(|&i| y[i]).collect();
    let scores = model.predict_proba(x_test.view())?;
    let test_metrics = compute_metrics(&y_test, &scores, cfg.threshold, &cfg.roi)?;
    save_to_path(&model, &dir.file("model.json"))?;
    dir.write_json("featurizer.json", &f.featurizer)?;
    let summary =
        TrainSummary { spec: &model.spec, search, n_train: f.part.train.len(), n_test: y_test.len(), test_metrics };
    dir.write_json("train.json", &summary)?;
    Ok(())
}

fn evaluate(cfg: &RunConfig, inputs: &Inputs, dir: &mut RunDir) -> Result<()> {
    let config = ExperimentConfig {
        features: cfg.features(),
        classifier: cfg.classifier.clone(),
        threshold: cfg.threshold,
        roi: cfg.roi,
        groupings: cfg.groupings.clone(),
        min_support: cfg.min_support,
    };
    let report = repeated_experiment(&inputs.data, &inputs.res, &config, &cfg.plan())?;
    if let (Some(auc), Some(roi)) = (report.aggregate.get("auroc"), report.aggregate.get("roi")) {
        info!(
            "AUROC {:.2} (sd {:.2}), ROI {:.2}",
            auc.mean.unwrap_or(f64::NAN),
            auc.sd.unwrap_or(f64::NAN),
            roi.mean.unwrap_or(f64::NAN)
        );
    }
    dir.write_json("report.json", &report)?;
    report.write_csv(BufWriter::new(File::create(dir.file("metrics.csv"))?))?;
    let mut w = csv::Writer::from_path(dir.file("predictions.csv"))?;
    w.write_record(["repeat", "id", "label", "score"])?;
    for r in &report.repeats {
        for p in &r.predictions {
            w.write_record([r.repeat.to_string(), p.id.clone(), u8::from(p.label).to_string(), p.score.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

fn explain(cfg: &RunConfig, inputs: &Inputs, dir: &mut RunDir) -> Result<()> {
    let (f, model, _) = fit_model(cfg, inputs)?;
    let rows: Vec<usize> = f.part.test.iter().copied().take(cfg.shap.rows).collect();
    if rows.is_empty() {
        return Err(CliError::Config { key: "shap.rows".into(), message: "nothing to explain".into() });
    }
    let xs = f.featurizer.transform(&inputs.profiles(&rows), &inputs.res)?;
    let background = sample_background(f.x_train.view(), cfg.shap.background, derive_seed(cfg.seed, &[2]));
    let shap = ShapConfig {
        mode: cfg.shap.mode,
        granularity: cfg.shap.granularity,
        n_samples: cfg.shap.n_samples,
        seed: derive_seed(cfg.seed, &[3]),
    };
    let attrs = explain_rows(&model, background.view(), xs.view(), &f.featurizer.layout, &shap)?;
    let ids = inputs.ids(&rows);
    write_attributions_csv(BufWriter::new(File::create(dir.file("shap.csv"))?), &ids, &attrs)?;
    let summary = ExplanationSummary::new(shap, &ids, attrs)?;
    for imp in summary.importance.iter().take(5) {
        info!("{:<32} {:.4}", imp.name, imp.mean_abs);
    }
    dir.write_json("shap.json", &summary)?;
    Ok(())
}

fn synth(args: &SynthArgs) -> Result<()> {
    let config = SynthConfig::with_n(args.n, args.seed);
    config.validate()?;
    let data = generate_synthetic(&config)?;
    std::fs::create_dir_all(&args.out)?;
    data.write_profiles(&args.out.join("profiles.jsonl"))?;
    data.write_embeddings(&args.out.join("embeddings.jsonl"))?;
    let mut truth = serde_json::to_vec_pretty(&serde_json::json!({ "config": config, "truth": data.truth }))?;
    truth.push(b'\n');
    std::fs::write(args.out.join("truth.json"), truth)?;

    let mut run = RunConfig::default();
    run.paths.profiles = Some("profiles.jsonl".into());
    run.paths.embedding_cache = Some("embeddings.jsonl".into());
    run.paths.output_dir = Some("runs".into());
    run.cutoff = config.cutoff;
    let mut bytes = serde_json::to_vec_pretty(&run)?;
    bytes.push(b'\n');
    std::fs::write(args.out.join("config.json"), bytes)?;

    let manifest = serde_json::json!({
        "command": "synth",
        "created_at": timestamp(),
        "seeds": { "master": args.seed },
        "versions": { "vfuse": env!("CARGO_PKG_VERSION") },
        "n": args.n,
        "prevalence": data.prevalence(),
        "outputs": ["profiles.jsonl", "embeddings.jsonl", "truth.json", "config.json"],
    });
    std::fs::write(args.out.join("manifest.json"), serde_json::to_vec_pretty(&manifest)?)?;
    info!("{} synthetic profiles, prevalence {:.4}", args.n, data.prevalence());
    println!("{}", args.out.join("config.json").display());
    Ok(())
}

#[derive(Debug, Deserialize)]
struct PredictionRow {
    repeat: usize,
    id: String,
    label: u8,
    score: f64,
}

fn read_predictions(path: &Path, repeat: usize) -> Result<Vec<PredictionRow>> {
    let mut r = csv::Reader::from_path(path)
        .map_err(|e| CliError::Config { key: "predictions".into(), message: format!("{}: {e}", path.display()) })?;
    let mut rows = Vec::new();
    for rec in r.deserialize() {
        let row: PredictionRow = rec?;
        if row.repeat == repeat {
            rows.push(row);
        }
    }
    if rows.is_empty() {
        return Err(CliError::Failed(format!("{} has no predictions for repeat {repeat}", path.display())));
    }
    rows.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(rows)
}

fn mcnemar(args: &McNemarArgs) -> Result<()> {
    if !(0.0..=1.0).contains(&args.threshold) {
        return Err(CliError::Config { key: "threshold".into(), message: "must lie in [0, 1]".into() });
    }
    for (key, p) in [("a", &args.a), ("b", &args.b)] {
        if !p.exists() {
            return Err(CliError::Config { key: key.into(), message: format!("{} does not exist", p.display()) });
        }
    }
    let a = read_predictions(&args.a, args.repeat)?;
    let b = read_predictions(&args.b, args.repeat)?;
    if a.len() != b.len() || a.iter().zip(&b).any(|(x, y)| x.id != y.id || x.label != y.label) {
        return Err(CliError::Failed("the two prediction files do not cover the same labeled rows".into()));
    }
    let y: Vec<bool> = a.iter().map(|r| r.label == 1).collect();
    let pa: Vec<bool> = a.iter().map(|r| r.score >= args.threshold).collect();
    let pb: Vec<bool> = b.iter().map(|r| r.score >= args.threshold).collect();
    let result = mcnemar_test(&pa, &pb, &y)?;
    println!("{}", serde_json::to_string(&result)?);

    let mut hasher = Sha256::new();
    hasher.update(std::fs::read(&args.a)?);
    hasher.update(std::fs::read(&args.b)?);
    hasher.update(format!("{}:{}", args.repeat, args.threshold));
    let hash: String = hasher.finalize().iter().map(|b| format!("{b:02x}")).collect();
    let root = args.out.clone().unwrap_or_else(|| PathBuf::from("vfuse-out"));
    let mut dir = RunDir::create(&root, hash)?;
    let body =
        serde_json::json!({ "repeat": args.repeat, "threshold": args.threshold, "n": y.len(), "result": result });
    dir.write_json("mcnemar.json", &body)?;
    let config = serde_json::json!({
        "a": args.a, "b": args.b, "repeat": args.repeat, "threshold": args.threshold,
    });
    dir.finish("mcnemar", config, serde_json::json!({}))?;
    Ok(())
}

fn accept(args: &AcceptArgs) -> Result<()> {
    let mut suite = if args.quick { SuiteConfig::quick() } else { SuiteConfig::default() };
    if let Some(seed) = args.seed {
        suite.seed = seed;
    }
    let pool = thread_pool(args.workers)?;
    let report = pool.install(|| run_acceptance(&suite))?;
    for c in &report.criteria {
        let measured: Vec<String> = c.measured.iter().map(|(k, v)| format!("{k}={v:.4}")).collect();
        println!(
            "[{}] criterion {:>2} {:<26} {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.id,
            c.name,
            measured.join(" ")
        );
    }
    let hash = sha256_hex(&serde_json::to_vec(&suite)?);
    let mut dir = RunDir::create(&args.out, hash)?;
    dir.write_json("acceptance.json", &report)?;
    let path = dir.finish("accept", serde_json::to_value(&suite)?, serde_json::json!({ "master": suite.seed }))?;
    println!("{}", path.display());
    if report.passed {
        Ok(())
    } else {
        Err(CliError::Failed(format!("acceptance criteria failed: {:?}", report.failed_ids())))
    }
}

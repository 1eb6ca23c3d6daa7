//! Repeated split / fit / evaluate runs with mean and standard deviation.

use std::collections::BTreeMap;
use std::io::Write;

use ndarray::ArrayView2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{compute_metrics, MetricsReport, RoiParams, METRIC_NAMES};
use super::search::{full_grid, random_search_cv, DEFAULT_FOLDS, DEFAULT_ITERATIONS};
use super::split::{out_of_time_split, stratified_split, Partition, SplitMode, SplitPlan};
use super::subgroup::{subgroup_report, GroupReport, Grouping, SubgroupRow, DEFAULT_MIN_SUPPORT};
use crate::error::{Error, Result};
use crate::model::{derive_seed, fit, ClassifierConfig, Family, ModelSpec, Predictor, TrainedClassifier};
use crate::pipeline::{FeatureConfig, Featurizer, TextResources};
use crate::profile::{months_between, LabeledProfile, StartupProfile};

/// A fixed configuration, or randomized search over a family's grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "strategy", rename_all = "snake_case")]
pub enum ClassifierChoice {
    Fixed { spec: ModelSpec },
    Tune { family: Family, n_iter: usize, n_folds: usize },
}

impl ClassifierChoice {
    pub fn tune(family: Family) -> Self {
        ClassifierChoice::Tune { family, n_iter: DEFAULT_ITERATIONS, n_folds: DEFAULT_FOLDS }
    }
}

fn default_threshold() -> f64 {
    0.5
}

fn default_min_support() -> usize {
    DEFAULT_MIN_SUPPORT
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub features: FeatureConfig,
    pub classifier: ClassifierChoice,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default)]
    pub roi: RoiParams,
    #[serde(default)]
    pub groupings: Vec<Grouping>,
    #[serde(default = "default_min_support")]
    pub min_support: usize,
}

impl ExperimentConfig {
    pub fn new(features: FeatureConfig, classifier: ClassifierChoice) -> Self {
        Self {
            features,
            classifier,
            threshold: default_threshold(),
            roi: RoiParams::default(),
            groupings: Vec::new(),
            min_support: DEFAULT_MIN_SUPPORT,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub id: String,
    pub label: bool,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSummary {
    pub n_candidates: usize,
    pub best_mean_auroc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepeatReport {
    pub repeat: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub spec: ModelSpec,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub search: Option<SearchSummary>,
    pub metrics: MetricsReport,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub subgroups: Vec<GroupReport>,
    pub predictions: Vec<Prediction>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub mean: Option<f64>,
    /// Sample standard deviation (n - 1); 0 with a single value.
    pub sd: Option<f64>,
    /// Repeats on which the metric was defined.
    pub n: usize,
}

impl Aggregate {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Aggregate { mean: None, sd: None, n };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let sd = if n == 1 {
            0.0
        } else {
            (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64).sqrt()
        };
        Aggregate { mean: Some(mean), sd: Some(sd), n }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub plan: SplitPlan,
    /// Only one repeat ran, so every SD is reported as 0.
    pub single_repeat: bool,
    pub aggregate: BTreeMap<String, Aggregate>,
    pub repeats: Vec<RepeatReport>,
}

impl ExperimentReport {
    pub fn mean(&self, metric: &str) -> Option<f64> {
        self.aggregate.get(metric).and_then(|a| a.mean)
    }

    /// Long format: one row per repeat x group x metric, then mean and SD rows.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["scope", "grouping", "group", "metric", "value"])?;
        let fmt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
        for r in &self.repeats {
            let scope = format!("repeat_{}", r.repeat);
            for m in METRIC_NAMES {
                out.write_record([scope.as_str(), "all", "all", m, &fmt(r.metrics.get(m))])?;
            }
            for g in &r.subgroups {
                let grouping = g.grouping.as_str();
                out.write_record([scope.as_str(), grouping, &g.group, "n", &g.n.to_string()])?;
                out.write_record([scope.as_str(), grouping, &g.group, "correct_rate", &g.correct_rate.to_string()])?;
                if let Some(metrics) = &g.metrics {
                    for m in METRIC_NAMES {
                        out.write_record([scope.as_str(), grouping, &g.group, m, &fmt(metrics.get(m))])?;
                    }
                }
            }
        }
        for (m, a) in &self.aggregate {
            out.write_record(["mean", "all", "all", m, &fmt(a.mean)])?;
            out.write_record(["sd", "all", "all", m, &fmt(a.sd)])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Fits the configured classifier on a prepared training matrix, tuning
/// first when asked to.
pub fn fit_choice(
    x: ArrayView2<f64>,
    y: &[bool],
    choice: &ClassifierChoice,
    seed: u64,
) -> Result<(TrainedClassifier, Option<SearchSummary>)> {
    let (spec, summary) = match choice {
        ClassifierChoice::Fixed { spec } => (spec.clone(), None),
        ClassifierChoice::Tune { family, n_iter, n_folds } => {
            let grid = full_grid(*family);
            let result = random_search_cv(x, y, *family, &grid, *n_folds, *n_iter, derive_seed(seed, &[0]))?;
            let summary =
                SearchSummary { n_candidates: result.candidates.len(), best_mean_auroc: result.best_mean_auroc };
            (result.best, Some(summary))
        }
    };
    let model = fit(x, y, &ClassifierConfig::new(spec, derive_seed(seed, &[1])))?;
    Ok((model, summary))
}

pub fn subgroup_row(lp: &LabeledProfile, score: f64, cutoff: chrono::NaiveDate) -> SubgroupRow {
    SubgroupRow {
        sectors: lp.profile.sectors.iter().cloned().collect(),
        age_months: months_between(lp.profile.founded_on, cutoff),
        word_count: lp.profile.word_count(),
        event: lp.event,
        label: lp.label.is_positive(),
        score,
    }
}

fn partition(data: &[LabeledProfile], plan: &SplitPlan, repeat: usize) -> Result<Partition> {
    match plan.mode {
        SplitMode::StratifiedRandom => {
            let y: Vec<bool> = data.iter().map(|d| d.label.is_positive()).collect();
            stratified_split(&y, plan, repeat)
        }
        SplitMode::OutOfTime => {
            let founded: Vec<_> = data.iter().map(|d| d.profile.founded_on).collect();
            out_of_time_split(&founded, plan.cutoff_date.expect("validated"))
        }
    }
}

fn run_repeat(
    data: &[LabeledProfile],
    res: &TextResources,
    config: &ExperimentConfig,
    plan: &SplitPlan,
    repeat: usize,
) -> Result<RepeatReport> {
    let part = partition(data, plan, repeat)?;
    let train: Vec<&StartupProfile> = part.train.iter().map(|&i| &data[i].profile).collect();
    let test: Vec<&StartupProfile> = part.test.iter().map(|&i| &data[i].profile).collect();
    let y_train: Vec<bool> = part.train.iter().map(|&i| data[i].label.is_positive()).collect();
    let y_test: Vec<bool> = part.test.iter().map(|&i| data[i].label.is_positive()).collect();

    let (featurizer, x_train) = Featurizer::fit(&train, &config.features, res)?;
    let x_test = featurizer.transform(&test, res)?;
    let seed = derive_seed(plan.master_seed, &[repeat as u64, 1]);
    let (model, search) = fit_choice(x_train.view(), &y_train, &config.classifier, seed)?;
    let scores = model.predict_proba(x_test.view())?;
    let metrics = compute_metrics(&y_test, &scores, config.threshold, &config.roi)?;

    let rows: Vec<SubgroupRow> =
        part.test.iter().zip(&scores).map(|(&i, &s)| subgroup_row(&data[i], s, config.features.cutoff)).collect();
    let mut subgroups = Vec::new();
    for &g in &config.groupings {
        subgroups.extend(subgroup_report(&rows, g, config.threshold, &config.roi, config.min_support)?);
    }
    let predictions = part
        .test
        .iter()
        .zip(&scores)
        .map(|(&i, &score)| Prediction { id: data[i].profile.id.clone(), label: data[i].label.is_positive(), score })
        .collect();
    Ok(RepeatReport {
        repeat,
        n_train: part.train.len(),
        n_test: part.test.len(),
        spec: model.spec.clone(),
        search,
        metrics,
        subgroups,
        predictions,
    })
}

/// Runs `plan.n_repeats` independent repeats (in parallel) and aggregates
/// their test metrics. Out-of-time plans reuse one partition and vary only
/// the model seed.
pub fn repeated_experiment(
    data: &[LabeledProfile],
    res: &TextResources,
    config: &ExperimentConfig,
    plan: &SplitPlan,
) -> Result<ExperimentReport> {
    plan.validate()?;
    if !(0.0..=1.0).contains(&config.threshold) {
        return Err(Error::Config { key: "threshold".into(), message: "must lie in [0, 1]".into() });
    }
    config.roi.validate()?;
    let repeats: Vec<RepeatReport> =
        (0..plan.n_repeats).into_par_iter().map(|r| run_repeat(data, res, config, plan, r)).collect::<Result<_>>()?;
    let aggregate = METRIC_NAMES
        .iter()
        .map(|&m| {
            let values: Vec<f64> = repeats.iter().filter_map(|r| r.metrics.get(m)).collect();
            (m.to_string(), Aggregate::of(&values))
        })
        .collect();
    Ok(ExperimentReport {
        config: config.clone(),
        plan: plan.clone(),
        single_repeat: plan.n_repeats == 1,
        aggregate,
        repeats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aggregate_uses_sample_sd() {
        let a = Aggregate::of(&[1.0, 2.0, 3.0]);
        assert_eq!(a.mean, Some(2.0));
        assert_eq!(a.sd, Some(1.0));
        assert_eq!(Aggregate::of(&[4.0]).sd, Some(0.0));
        assert_eq!(Aggregate::of(&[]).mean, None);
    }
}

//! Evaluation protocol: splits, tuning, metrics, paired tests and
//! subgroup breakdowns.

mod experiment;
mod mcnemar;
mod metrics;
mod search;
mod split;
mod subgroup;

pub use experiment::{
    fit_choice, repeated_experiment, subgroup_row, Aggregate, ClassifierChoice, ExperimentConfig, ExperimentReport,
    Prediction, RepeatReport, SearchSummary,
};
pub use mcnemar::{mcnemar_from_counts, mcnemar_test, McNemarResult};
pub use metrics::{
    auroc, average_precision, compute_metrics, compute_roi, Confusion, MetricsReport, RoiParams, METRIC_NAMES,
};
pub use search::{
    full_grid, random_search_cv, select_best, Candidate, SearchResult, DEFAULT_FOLDS, DEFAULT_ITERATIONS,
};
pub use split::{out_of_time_split, stratified_folds, stratified_split, Partition, SplitMode, SplitPlan};
pub use subgroup::{
    age_bucket, event_bucket, length_bucket, subgroup_report, GroupReport, Grouping, SubgroupRow, DEFAULT_MIN_SUPPORT,
    UNASSIGNED_SECTOR,
};

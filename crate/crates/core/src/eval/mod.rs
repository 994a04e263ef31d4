//! Fold plans, cross-validation, significance tests, the batch-statistics
//! leakage experiment and synthetic datasets.

pub mod bn;
pub mod cv;
pub mod folds;
mod metrics;
pub mod stats;
pub mod synth;

pub use cv::{cross_validate, run_task, validate_inputs, CvConfig, CvTask, EvalReport, FoldResult, ReportMeta};
pub use folds::{stratified_folds, stratified_holdout, Assignment, FoldPlan, SplitTag};
pub use metrics::{accuracy, mean_std};
pub use stats::{one_way_anova, pooled_t_test, welch_t_test, Anova, TTest};
pub use synth::{SynthParams, SynthTask, SyntheticSpec};
pub use bn::{batched_features, bn_leakage_experiment, BatchFeaturizer, BatchOrdering, BnCell, BnConfig, InNetworkBn, PerRunFeatures, PrecomputedFeatures};

//! Cross-validation driver, significance tests and synthetic data.

mod experiment;
mod folds;
pub mod report;
mod stats;
mod synth;

pub use experiment::{
    run_experiment, ExperimentParams, ExperimentReport, Method, MethodSummary, QueryCounts, Significance,
};
pub use folds::{split_folds, FoldPair, FoldPlan};
pub use stats::{bonferroni, mean, paired_t_test, sample_sd, TTest};
pub use synth::{synth_generate, SynthData, SynthRole, SynthSpec};

//! Binary decision tree, repeated stratified cross-validation and metrics.

mod cv;
mod metrics;
mod sweep;
mod tree;

use thiserror::Error;

use crate::activity::Label;
use crate::features::FeatureError;

pub use cv::{evaluate, grouped_folds, stratified_folds, CrossValConfig, FoldGrouping};
pub use metrics::{Confusion, MetricsReport, RepetitionMetrics, Scores};
pub use sweep::{
    sweep_csv, sweep_metrics_csv, sweep_text_table, window_sweep, SweepRow, DEFAULT_SWEEP_LENGTHS,
};
pub use tree::{gini, DecisionTree, Node, TreeConfig};

#[derive(Debug, Error)]
pub enum LearnerError {
    #[error("impurity of an empty node is undefined")]
    EmptyNode,
    #[error("no training samples")]
    NoSamples,
    #[error("expected {expected} features, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("{labels} labels for {rows} rows")]
    LabelCount { rows: usize, labels: usize },
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("class `{class}` has {count} members, fewer than {folds} folds")]
    Stratification { class: Label, count: usize, folds: usize },
    #[error("{groups} groups cannot fill {folds} folds")]
    TooFewGroups { groups: usize, folds: usize },
    #[error("window length {len} is not shorter than the shortest climb ({shortest} samples)")]
    WindowTooLong { len: usize, shortest: usize },
    #[error(transparent)]
    Feature(#[from] FeatureError),
}

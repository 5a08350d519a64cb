//! Test sequences, sequence-level metrics, the cross-validated comparison of
//! the plain and context-dependent systems, and rank/significance summaries.

mod experiment;
mod metrics;
mod sequences;
mod stats;

use thiserror::Error;

use crate::context::{BoxId, ContextError, MovementId};
use crate::features::FeatureError;
use crate::optimizer::OptimizerError;
use crate::runtime::RuntimeError;
use crate::signal::SignalError;
use crate::ClassLabel;

pub use experiment::{
    classifier_for_fold, summarize, Criterion, Experiment, ExperimentConfig, FoldReport, Method, MetricsRow,
    MetricsSummary, PairTest, SummaryEntry, DEFAULT_ALPHA, DEFAULT_FOLDS, DEFAULT_INNER_FOLDS, DEFAULT_REPETITIONS,
};
pub use metrics::{evaluate_sequence, sqcov_metric, zo_metric, SequenceClassifier, SequenceOutcome};
pub use sequences::{
    class_pools, generate_movement_sequences, sample_object_sequences, sequence_to_classes, MovementSequence,
};
pub use stats::{average_ranks, holm, mean_std, rank_descending, wilcoxon_signed_rank, WilcoxonResult};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvaluationError {
    #[error("movement {movement} is not performed in box {at:?}")]
    MovementNotInBox { movement: MovementId, at: BoxId },
    #[error("no test objects of class {0}")]
    EmptyPool(ClassLabel),
    #[error("empty sequence")]
    EmptySequence,
    #[error("no outcomes to average")]
    NoOutcomes,
    #[error("length mismatch: {objects} objects, {classes} classes")]
    LengthMismatch { objects: usize, classes: usize },
    #[error("{rows} feature rows but {labels} labels")]
    RowCount { rows: usize, labels: usize },
    #[error("label {label} outside 1..={num_classes}")]
    LabelOutOfRange { label: ClassLabel, num_classes: u32 },
    #[error("fold {fold} out of range (k = {k})")]
    NoSuchFold { fold: usize, k: usize },
    #[error("invalid experiment setting: {0}")]
    InvalidConfig(&'static str),
    #[error(transparent)]
    Runtime(#[from] RuntimeError),
    #[error(transparent)]
    Context(#[from] ContextError),
    #[error(transparent)]
    Optimizer(#[from] OptimizerError),
    #[error(transparent)]
    Signal(#[from] SignalError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
}

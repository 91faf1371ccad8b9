//! The hierarchical estimator: sorted-suspicion label modification across
//! fidelity levels, the iterative true-model correction loop, the surrogate
//! mixture it induces, the closed-form cost predictor, and the
//! misclassification diagnostic.

mod cost;
mod diagnostics;
mod iterate;
mod mixture;
mod modify;
mod pipeline;

pub use cost::{predicted_cost, training_layer_units, CostPrediction};
pub use diagnostics::{
    misclassification_diagnostic, DiagnosticPoint, DiagnosticReport, DiagnosticsConfig,
    LevelCurve,
};
pub use iterate::{iterate, IterationTrace, StopReason};
pub use mixture::{compose_hnh_value, mixture_weights};
pub use modify::{modify_labels, modify_labels_with, EpsAccumulation, ModificationState};
pub use pipeline::{estimate_failure_probability, RunOutcome};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HnhError {
    #[error("hierarchy has no levels")]
    NoLevels,
    #[error("ledger tracks {ledger} levels but the hierarchy has {levels}")]
    LedgerLevels { ledger: usize, levels: usize },
    #[error("batch dimension {batch} does not match hierarchy input dimension {levels}")]
    DimensionMismatch { batch: usize, levels: usize },
    #[error("non-finite level-{level} surrogate value at sample index {index}")]
    NonFinite { level: usize, index: usize },
    #[error("modification count {m} out of range 0..={max}")]
    ModificationOutOfRange { m: usize, max: usize },
    #[error("true-model evaluation failed at sample index {index} after {completed_iterations} iterations: {source}")]
    TrueModel {
        index: usize,
        completed_iterations: usize,
        source: crate::models::ModelError,
    },
    #[error(transparent)]
    Surrogate(#[from] crate::surrogate::SurrogateError),
    #[error(transparent)]
    Estimator(#[from] crate::estimator::EstimatorError),
    #[error("invalid diagnostics config: {0}")]
    InvalidDiagnostics(String),
}

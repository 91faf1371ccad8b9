//! Input distributions, sampling, failure indicators, the plain-MC and
//! hybrid estimators, and cost accounting.

mod estimate;
mod ledger;
mod sampling;

pub use estimate::{
    hybrid_estimate, mc_estimate, FailureEstimate, FailureLabelVector, Fidelity, HybridConfig,
};
pub use ledger::{merge_ledgers, CostLedger};
pub use sampling::{sample, ParameterDistribution, SampleBatch};

use thiserror::Error;

/// Errors from sampling, estimation, and ledger bookkeeping.
#[derive(Debug, Error)]
pub enum EstimatorError {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("empty label vector")]
    EmptyLabels,
    #[error("label vector length {labels} does not match batch size {batch}")]
    LengthMismatch { labels: usize, batch: usize },
    #[error("non-finite surrogate value at sample index {index}")]
    NonFiniteSurrogate { index: usize },
    #[error("invalid hybrid config: {0}")]
    InvalidConfig(String),
    #[error("ledger metadata mismatch: depths {a_depths:?}/width {a_width} vs depths {b_depths:?}/width {b_width}")]
    LedgerMismatch {
        a_depths: Vec<usize>,
        a_width: usize,
        b_depths: Vec<usize>,
        b_width: usize,
    },
    #[error("model evaluation failed at sample index {index}: {source}")]
    Model {
        index: usize,
        source: crate::models::ModelError,
    },
}

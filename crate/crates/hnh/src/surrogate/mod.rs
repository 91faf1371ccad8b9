//! From-scratch feedforward-network surrogates of configurable depth, their
//! training, and depth-ordered hierarchies built on shared data.

mod hierarchy;
mod io;
mod mlp;
mod train;

pub use hierarchy::{build_hierarchy, FidelityLevels, SurrogateHierarchy};
pub use io::{load_surrogate, save_surrogate};
pub use mlp::{forward, forward_batch, backward, Activation, MlpGradient, MlpSurrogate};
pub use train::{
    cross_validate, train, CrossValidationReport, EpochStats, OptimizerKind, TrainOptions,
    TrainingReport, TrainingSet,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SurrogateError {
    #[error("input has dimension {got}, network expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("input contains a non-finite value")]
    NonFiniteInput,
    #[error("training diverged at epoch {epoch}: loss is not finite")]
    Divergence { epoch: usize },
    #[error("invalid training options: {0}")]
    InvalidOptions(String),
    #[error("invalid hierarchy: {0}")]
    InvalidHierarchy(String),
    #[error("level {level} out of range 1..={levels}")]
    LevelOutOfRange { level: usize, levels: usize },
    #[error("weights file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

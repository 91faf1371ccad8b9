//! Rare-event failure probability estimation for expensive limit-state models.
//!
//! The estimator combines three ingredients:
//!
//! * plain Monte Carlo over a declared input distribution ([`estimator`]),
//! * a hierarchy of feedforward-network surrogates of increasing depth
//!   trained on one shared dataset ([`surrogate`]),
//! * a sorted-suspicion modification pass plus an iterative true-model
//!   correction loop that re-verifies only the samples the coarse surrogate
//!   is least sure about ([`hnh`]).
//!
//! Concrete limit-state models (an analytic structural-safety benchmark, a
//! stochastic diffusion FEM with a Karhunen-Loeve random field, and a
//! Helmholtz finite-difference solver) live in [`models`].
//!
//! Everything is deterministic given the recorded seeds: sampling uses a
//! ChaCha12 counter-based generator, reductions run in a fixed order, and
//! parallelism never changes results.

pub mod estimator;
pub mod hnh;
pub mod models;
pub mod surrogate;

pub use estimator::{
    mc_estimate, merge_ledgers, sample, CostLedger, EstimatorError, FailureEstimate,
    FailureLabelVector, Fidelity, HybridConfig, ParameterDistribution, SampleBatch,
};

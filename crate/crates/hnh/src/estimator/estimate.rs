//! Failure labels, the plain Monte Carlo estimator, and the suspicious-domain
//! hybrid estimator.

use serde::{Deserialize, Serialize};

use super::{CostLedger, EstimatorError, SampleBatch};
use crate::models::LimitStateModel;

/// Which evaluator produced a sample's failure label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Fidelity {
    /// Surrogate level, 1 = coarsest.
    Level(u32),
    TrueModel,
}

/// Per-sample {0,1} failure indicators, each tagged with the fidelity that
/// produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct FailureLabelVector {
    labels: Vec<u8>,
    provenance: Vec<Fidelity>,
}

impl FailureLabelVector {
    pub fn new(labels: Vec<u8>, provenance: Vec<Fidelity>) -> Result<Self, EstimatorError> {
        if labels.len() != provenance.len() {
            return Err(EstimatorError::LengthMismatch {
                labels: labels.len(),
                batch: provenance.len(),
            });
        }
        if labels.iter().any(|&l| l > 1) {
            return Err(EstimatorError::InvalidConfig(
                "labels must be 0 or 1".into(),
            ));
        }
        Ok(FailureLabelVector { labels, provenance })
    }

    /// All labels produced by one fidelity.
    pub fn uniform(labels: Vec<u8>, fidelity: Fidelity) -> Result<Self, EstimatorError> {
        let provenance = vec![fidelity; labels.len()];
        Self::new(labels, provenance)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn provenance(&self) -> &[Fidelity] {
        &self.provenance
    }

    pub fn failures(&self) -> u64 {
        self.labels.iter().map(|&l| u64::from(l)).sum()
    }

    pub(crate) fn set(&mut self, i: usize, label: u8, fidelity: Fidelity) {
        debug_assert!(label <= 1);
        self.labels[i] = label;
        self.provenance[i] = fidelity;
    }
}

/// A failure-probability estimate with its binomial plug-in standard error.
///
/// `p_hat` is exactly `failures / samples` in floating point, and
/// `std_err = sqrt(p_hat * (1 - p_hat) / samples)`. When no failures were
/// observed the standard error is zero and `no_observed_failures` is set;
/// the error bar carries no information in that case.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FailureEstimate {
    pub p_hat: f64,
    pub failures: u64,
    pub samples: u64,
    pub std_err: f64,
    pub no_observed_failures: bool,
}

impl FailureEstimate {
    pub fn from_counts(failures: u64, samples: u64) -> Result<Self, EstimatorError> {
        if samples == 0 {
            return Err(EstimatorError::EmptyLabels);
        }
        debug_assert!(failures <= samples);
        let m = samples as f64;
        let p_hat = failures as f64 / m;
        let std_err = (p_hat * (1.0 - p_hat) / m).sqrt();
        Ok(FailureEstimate {
            p_hat,
            failures,
            samples,
            std_err,
            no_observed_failures: failures == 0,
        })
    }
}

/// Stopping and batching parameters of the hybrid correction schemes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HybridConfig {
    /// Half-width of the suspicious band; `f64::INFINITY` re-verifies all.
    pub gamma: f64,
    /// True-model solves per correction iteration.
    pub delta_m: usize,
    /// Iteration stop threshold on the estimate change.
    pub eps_opt: f64,
    /// Modification stop threshold on per-part correction magnitude.
    pub eta: f64,
    /// Accumulate signed corrections instead of magnitudes in the
    /// modification pass (the signed sum can cancel and stop early).
    pub signed_eps: bool,
}

impl HybridConfig {
    /// Defaults scaled to a batch of `m` samples: `eps_opt = 0.5 / m` is
    /// below one-label-change resolution, `eta = 1 / m` stops modification
    /// only when a part needed no corrections, `delta_m = 500`.
    pub fn for_samples(m: usize) -> Self {
        HybridConfig {
            gamma: f64::INFINITY,
            delta_m: 500,
            eps_opt: 0.5 / m as f64,
            eta: 1.0 / m as f64,
            signed_eps: false,
        }
    }

    pub fn validate(&self, m: usize) -> Result<(), EstimatorError> {
        if !(self.gamma >= 0.0) {
            return Err(EstimatorError::InvalidConfig(format!(
                "gamma must be nonnegative, got {}",
                self.gamma
            )));
        }
        if self.delta_m == 0 || self.delta_m > m {
            return Err(EstimatorError::InvalidConfig(format!(
                "delta_m must be in 1..={m}, got {}",
                self.delta_m
            )));
        }
        if !(self.eps_opt > 0.0) {
            return Err(EstimatorError::InvalidConfig(format!(
                "eps_opt must be positive, got {}",
                self.eps_opt
            )));
        }
        if !(self.eta >= 0.0) {
            return Err(EstimatorError::InvalidConfig(format!(
                "eta must be nonnegative, got {}",
                self.eta
            )));
        }
        Ok(())
    }
}

/// Plain Monte Carlo estimate from a label vector: the failure fraction.
pub fn mc_estimate(labels: &FailureLabelVector) -> Result<FailureEstimate, EstimatorError> {
    if labels.is_empty() {
        return Err(EstimatorError::EmptyLabels);
    }
    FailureEstimate::from_counts(labels.failures(), labels.len() as u64)
}

/// Hybrid estimate: trust the surrogate sign outside the suspicious band
/// `[-gamma, gamma]`, re-verify with the true model inside it.
///
/// A sample counts as failed when `g_hat < -gamma`, or when
/// `|g_hat| <= gamma` and the true model confirms `g < 0`. Every
/// re-verification increments `ledger.true_solves`.
pub fn hybrid_estimate(
    surrogate_values: &[f64],
    true_model: &dyn LimitStateModel,
    batch: &SampleBatch,
    gamma: f64,
    ledger: &mut CostLedger,
) -> Result<FailureEstimate, EstimatorError> {
    if surrogate_values.len() != batch.len() {
        return Err(EstimatorError::LengthMismatch {
            labels: surrogate_values.len(),
            batch: batch.len(),
        });
    }
    if batch.is_empty() {
        return Err(EstimatorError::EmptyLabels);
    }
    if !(gamma >= 0.0) {
        return Err(EstimatorError::InvalidConfig(format!(
            "gamma must be nonnegative, got {gamma}"
        )));
    }

    let mut failures = 0u64;
    for (i, &g_hat) in surrogate_values.iter().enumerate() {
        if !g_hat.is_finite() {
            return Err(EstimatorError::NonFiniteSurrogate { index: i });
        }
        if g_hat < -gamma {
            failures += 1;
        } else if g_hat.abs() <= gamma {
            let row = batch.row(i);
            let g = true_model
                .evaluate(row.as_slice().expect("batch rows are contiguous"))
                .map_err(|source| EstimatorError::Model { index: i, source })?;
            ledger.true_solves += 1;
            if g < 0.0 {
                failures += 1;
            }
        }
    }
    FailureEstimate::from_counts(failures, batch.len() as u64)
}

//! Iterative true-model correction: re-verify delta_M samples at a time in
//! the suspicion order until the estimate stops moving.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{HnhError, ModificationState};
use crate::estimator::{
    CostLedger, FailureEstimate, FailureLabelVector, Fidelity, HybridConfig, SampleBatch,
};
use crate::models::LimitStateModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    /// |delta P| fell to eps_opt or below.
    Converged,
    /// All M samples were re-verified before the threshold was met.
    BudgetExhausted,
}

/// Estimate path of the correction loop. `p_sequence[k]` is the estimate
/// after k iterations; `delta_p` and `eps` have one entry per iteration with
/// `eps[k] = |delta_p[k]|` exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationTrace {
    pub p_sequence: Vec<f64>,
    pub delta_p: Vec<f64>,
    pub eps: Vec<f64>,
    pub stop_reason: StopReason,
    pub true_solves_used: u64,
}

impl IterationTrace {
    pub fn iterations(&self) -> usize {
        self.delta_p.len()
    }
}

/// Runs the correction loop on labels produced by the modification pass.
///
/// Iteration k replaces the labels of the next `delta_m` samples in the
/// sorted-suspicion order with true-model indicators and updates the
/// estimate by the signed correction. Failure counts are kept as integers,
/// so after exhausting all M samples the estimate equals plain true-model
/// Monte Carlo exactly. The loop enters at least once (the initial change
/// measure is seeded at 10 * eps_opt) and stops when |delta P| <= eps_opt
/// or the samples run out.
pub fn iterate(
    labels: &mut FailureLabelVector,
    state: &ModificationState,
    batch: &SampleBatch,
    true_model: &dyn LimitStateModel,
    cfg: &HybridConfig,
    ledger: &mut CostLedger,
) -> Result<(FailureEstimate, IterationTrace), HnhError> {
    let m = batch.len();
    cfg.validate(m)?;
    if labels.len() != m || state.order.len() != m {
        return Err(HnhError::Estimator(
            crate::estimator::EstimatorError::LengthMismatch {
                labels: labels.len(),
                batch: m,
            },
        ));
    }

    let mut failures: u64 = labels.failures();
    let mut p_sequence = vec![failures as f64 / m as f64];
    let mut delta_p = Vec::new();
    let mut eps_trace = Vec::new();

    let mut eps = 10.0 * cfg.eps_opt;
    let mut consumed = 0usize;
    let mut stop_reason = StopReason::Converged;

    while eps > cfg.eps_opt {
        if consumed == m {
            stop_reason = StopReason::BudgetExhausted;
            break;
        }
        let take = cfg.delta_m.min(m - consumed);
        let rows = &state.order[consumed..consumed + take];

        let values: Vec<Result<f64, crate::models::ModelError>> = rows
            .par_iter()
            .map(|&r| {
                true_model.evaluate(batch.row(r).as_slice().expect("contiguous rows"))
            })
            .collect();
        // scan sequentially so the reported failure is the first by order
        for (k, value) in values.iter().enumerate() {
            if let Err(e) = value {
                return Err(HnhError::TrueModel {
                    index: rows[k],
                    completed_iterations: delta_p.len(),
                    source: clone_model_error(e),
                });
            }
        }
        ledger.true_solves += take as u64;

        for (k, &r) in rows.iter().enumerate() {
            let g = *values[k].as_ref().expect("errors handled above");
            let new_label = u8::from(g < 0.0);
            let old_label = labels.labels()[r];
            failures = failures + u64::from(new_label) - u64::from(old_label);
            labels.set(r, new_label, Fidelity::TrueModel);
        }
        consumed += take;

        let p_new = failures as f64 / m as f64;
        let p_old = *p_sequence.last().expect("seeded with p0");
        let dp = p_new - p_old;
        p_sequence.push(p_new);
        delta_p.push(dp);
        eps = dp.abs();
        eps_trace.push(eps);
    }
    if consumed == m && eps > cfg.eps_opt {
        stop_reason = StopReason::BudgetExhausted;
    }

    let estimate = FailureEstimate::from_counts(failures, m as u64)?;
    Ok((
        estimate,
        IterationTrace {
            p_sequence,
            delta_p,
            eps: eps_trace,
            stop_reason,
            true_solves_used: consumed as u64,
        },
    ))
}

fn clone_model_error(e: &crate::models::ModelError) -> crate::models::ModelError {
    use crate::models::ModelError::*;
    match e {
        DimensionMismatch { expected, got } => DimensionMismatch {
            expected: *expected,
            got: *got,
        },
        NonPositiveCoefficient { min, ix, iy } => NonPositiveCoefficient {
            min: *min,
            ix: *ix,
            iy: *iy,
        },
        TruncationTooLarge {
            requested,
            available,
        } => TruncationTooLarge {
            requested: *requested,
            available: *available,
        },
        SolverDiverged {
            residual,
            iterations,
            history,
        } => SolverDiverged {
            residual: *residual,
            iterations: *iterations,
            history: history.clone(),
        },
        Resonance { pivot } => Resonance { pivot: *pivot },
        OutOfDomain { x, y } => OutOfDomain { x: *x, y: *y },
        InvalidSetup(s) => InvalidSetup(s.clone()),
    }
}

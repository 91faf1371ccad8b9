//! Sorted-suspicion label modification: the coarsest surrogate labels every
//! sample, samples are ordered by ascending |g1| (most suspicious first) and
//! split into L equal parts, and parts are relabeled by progressively
//! coarser high-fidelity levels until one part needs almost no correction.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::HnhError;
use crate::estimator::{CostLedger, FailureLabelVector, Fidelity, SampleBatch};
use crate::surrogate::FidelityLevels;

/// How the per-part correction size is accumulated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EpsAccumulation {
    /// Sum of |delta_j|: stopping reflects correction magnitude.
    Absolute,
    /// Literal signed sum; positive and negative corrections can cancel and
    /// stop the pass early. Kept for comparison.
    Signed,
}

/// What the modification pass did: the suspicion ordering, the part layout,
/// per-part correction sizes, how many parts were visited (xi) and how many
/// samples changed labeling fidelity (m).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModificationState {
    /// Sample indices sorted by ascending |g1|, ties by index.
    pub order: Vec<usize>,
    /// L contiguous ranges over `order`; the last absorbs the remainder.
    pub parts: Vec<std::ops::Range<usize>>,
    /// eps_i for every visited part, in visit order.
    pub per_part_eps: Vec<f64>,
    /// xi: number of parts relabeled by a higher-fidelity level.
    pub parts_visited: usize,
    /// m: number of samples whose label changed fidelity.
    pub corrections_applied: usize,
}

/// `modify_labels` with the default magnitude accumulation.
pub fn modify_labels<F: FidelityLevels + ?Sized>(
    levels: &F,
    batch: &SampleBatch,
    eta: f64,
    ledger: &mut CostLedger,
) -> Result<(FailureLabelVector, ModificationState), HnhError> {
    modify_labels_with(levels, batch, eta, EpsAccumulation::Absolute, ledger)
}

/// Runs the modification pass.
///
/// Level 1 is evaluated on all M samples and defines both the initial labels
/// and the suspicion order. Part i (of L equal parts, i = 1..L-1) is
/// relabeled by level L+1-i — finest fidelity on the most suspicious part —
/// accumulating `eps_i = (L/M) * sum |delta_j|`; the pass stops after the
/// first part with `eps_i < eta`. Every surrogate evaluation is counted in
/// the ledger.
pub fn modify_labels_with<F: FidelityLevels + ?Sized>(
    levels: &F,
    batch: &SampleBatch,
    eta: f64,
    accumulation: EpsAccumulation,
    ledger: &mut CostLedger,
) -> Result<(FailureLabelVector, ModificationState), HnhError> {
    let l = levels.levels();
    if l == 0 {
        return Err(HnhError::NoLevels);
    }
    if ledger.levels() != l {
        return Err(HnhError::LedgerLevels {
            ledger: ledger.levels(),
            levels: l,
        });
    }
    if batch.dim() != levels.input_dim() {
        return Err(HnhError::DimensionMismatch {
            batch: batch.dim(),
            levels: levels.input_dim(),
        });
    }
    let m = batch.len();
    if m == 0 {
        return Err(HnhError::Estimator(
            crate::estimator::EstimatorError::EmptyLabels,
        ));
    }

    // coarse pass over everything
    let g1 = levels.eval_level_batch(1, batch.values.view())?;
    ledger.record_surrogate_evals(0, m as u64);
    for (i, v) in g1.iter().enumerate() {
        if !v.is_finite() {
            return Err(HnhError::NonFinite { level: 1, index: i });
        }
    }

    let mut labels = FailureLabelVector::uniform(
        g1.iter().map(|&v| u8::from(v < 0.0)).collect(),
        Fidelity::Level(1),
    )?;

    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| g1[a].abs().total_cmp(&g1[b].abs()).then(a.cmp(&b)));

    let part_size = m / l;
    let parts: Vec<std::ops::Range<usize>> = (0..l)
        .map(|i| {
            let start = i * part_size;
            let end = if i + 1 == l { m } else { (i + 1) * part_size };
            start..end
        })
        .collect();

    let mut per_part_eps = Vec::new();
    let mut parts_visited = 0usize;
    let mut corrections_applied = 0usize;

    for i in 1..l {
        let part = parts[i - 1].clone();
        let level = l + 1 - i;
        let rows: Vec<usize> = order[part].to_vec();
        if rows.is_empty() {
            per_part_eps.push(0.0);
            parts_visited = i;
            if 0.0 < eta {
                break;
            }
            continue;
        }

        let mut part_inputs = Array2::zeros((rows.len(), batch.dim()));
        for (k, &r) in rows.iter().enumerate() {
            part_inputs.row_mut(k).assign(&batch.row(r));
        }
        let values = levels.eval_level_batch(level, part_inputs.view())?;
        ledger.record_surrogate_evals(level - 1, rows.len() as u64);

        let mut eps_sum = 0.0;
        for (k, &r) in rows.iter().enumerate() {
            let v = values[k];
            if !v.is_finite() {
                return Err(HnhError::NonFinite { level, index: r });
            }
            let new_label = u8::from(v < 0.0);
            let delta = f64::from(new_label) - f64::from(labels.labels()[r]);
            eps_sum += match accumulation {
                EpsAccumulation::Absolute => delta.abs(),
                EpsAccumulation::Signed => delta,
            };
            labels.set(r, new_label, Fidelity::Level(level as u32));
        }
        corrections_applied += rows.len();
        let eps_i = (l as f64 / m as f64) * eps_sum;
        per_part_eps.push(eps_i);
        parts_visited = i;

        if eps_i < eta {
            break;
        }
    }

    Ok((
        labels,
        ModificationState {
            order,
            parts,
            per_part_eps,
            parts_visited,
            corrections_applied,
        },
    ))
}

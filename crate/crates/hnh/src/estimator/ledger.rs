//! Cost accounting in true-model solves and per-level surrogate evaluations.

use serde::{Deserialize, Serialize};

use super::EstimatorError;

/// Counts of true-model solves and per-level surrogate evaluations.
///
/// The layer-unit convention prices one evaluation of a depth-P, width-N
/// network at `P * N^2`, so `layer_units = sum_l evals[l] * depths[l] * N^2`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostLedger {
    pub true_solves: u64,
    /// Evaluation counts, one entry per hierarchy level (level 1 first).
    pub surrogate_evals: Vec<u64>,
    /// Hidden-layer counts P_l, one per level.
    pub depths: Vec<usize>,
    /// Neurons per hidden layer, shared across levels.
    pub width: usize,
}

impl CostLedger {
    pub fn new(depths: Vec<usize>, width: usize) -> Self {
        let levels = depths.len();
        CostLedger {
            true_solves: 0,
            surrogate_evals: vec![0; levels],
            depths,
            width,
        }
    }

    pub fn levels(&self) -> usize {
        self.depths.len()
    }

    pub(crate) fn record_surrogate_evals(&mut self, level_index: usize, count: u64) {
        self.surrogate_evals[level_index] += count;
    }

    /// Total cost in layer-evaluation units.
    pub fn layer_units(&self) -> u64 {
        let n2 = (self.width as u64) * (self.width as u64);
        self.surrogate_evals
            .iter()
            .zip(&self.depths)
            .map(|(&evals, &p)| evals * p as u64 * n2)
            .sum()
    }
}

/// Componentwise sum of two ledgers with identical depth/width metadata.
pub fn merge_ledgers(a: &CostLedger, b: &CostLedger) -> Result<CostLedger, EstimatorError> {
    if a.depths != b.depths || a.width != b.width {
        return Err(EstimatorError::LedgerMismatch {
            a_depths: a.depths.clone(),
            a_width: a.width,
            b_depths: b.depths.clone(),
            b_width: b.width,
        });
    }
    let surrogate_evals = a
        .surrogate_evals
        .iter()
        .zip(&b.surrogate_evals)
        .map(|(x, y)| x + y)
        .collect();
    Ok(CostLedger {
        true_solves: a.true_solves + b.true_solves,
        surrogate_evals,
        depths: a.depths.clone(),
        width: a.width,
    })
}

//! Closed-form cost model in layer-evaluation units (one evaluation of a
//! depth-P, width-N network costs P * N^2).

use serde::{Deserialize, Serialize};

/// Predicted evaluation cost of one estimation run, against the
/// single-fidelity baseline that pushes every sample through the deepest
/// network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostPrediction {
    /// M * P_1 * N^2 plus one part worth of each visited high-fidelity level.
    pub hierarchical_units: u64,
    /// M * P_L * N^2.
    pub single_fidelity_units: u64,
    /// Number of parts the modification visited, ceil(m L / M).
    pub xi: usize,
}

/// Evaluates the closed form for `m` modifications out of `total` samples.
///
/// Parts hold `floor(M / L)` samples (the remainder part is never visited by
/// the modification loop), so the prediction matches counted ledger units
/// exactly for every M, not just multiples of L.
pub fn predicted_cost(
    total: usize,
    depths: &[usize],
    width: usize,
    m: usize,
) -> CostPrediction {
    let l = depths.len();
    assert!(l >= 1, "at least one level");
    assert!(m <= total, "m out of range");
    let n2 = (width as u64) * (width as u64);
    let part = (total / l) as u64;

    // the modification loop visits at most L-1 parts (the remainder part is
    // labeled by level 1 alone), so xi is capped accordingly; L = 1 never
    // modifies anything
    let xi = if m == 0 {
        0
    } else {
        (m * l).div_ceil(total).min(l - 1)
    };
    let mut units = total as u64 * depths[0] as u64 * n2;
    for i in 1..=xi {
        let level = l + 1 - i; // level visited for part i
        units += part * depths[level - 1] as u64 * n2;
    }
    CostPrediction {
        hierarchical_units: units,
        single_fidelity_units: total as u64 * depths[l - 1] as u64 * n2,
        xi,
    }
}

/// Training cost in the same units: one optimization step is priced at three
/// forward passes (forward plus roughly double for the backward sweep).
pub fn training_layer_units(train_evals: &[u64], depths: &[usize], width: usize) -> u64 {
    let n2 = (width as u64) * (width as u64);
    train_evals
        .iter()
        .zip(depths)
        .map(|(&evals, &p)| 3 * evals * p as u64 * n2)
        .sum()
}

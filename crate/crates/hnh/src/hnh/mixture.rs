//! The surrogate mixture induced by m applied modifications: a convex
//! combination of hierarchy levels whose weights telescope to one.

use super::HnhError;
use crate::surrogate::FidelityLevels;

/// Per-level mixture weights for `m` modifications out of `M` samples over
/// `l` levels (index 0 = level 1). With `xi = ceil(m l / M)`:
/// levels L+1-i for i < xi carry 1/l, level L-xi+1 carries
/// `(m l - (xi-1) M) / (M l)`, and level 1 carries `(M - m) / M`; the
/// weights always sum to 1 by the telescoping identity. `m = 0` degenerates
/// to level 1 alone.
pub fn mixture_weights(m: usize, total: usize, l: usize) -> Result<Vec<f64>, HnhError> {
    if l == 0 {
        return Err(HnhError::NoLevels);
    }
    if m > total || total == 0 {
        return Err(HnhError::ModificationOutOfRange { m, max: total });
    }
    let mut weights = vec![0.0; l];
    if m == 0 {
        weights[0] = 1.0;
        return Ok(weights);
    }
    let xi = (m * l).div_ceil(total);
    for i in 1..xi {
        weights[l - i] += 1.0 / l as f64; // level l+1-i
    }
    let mid_level = l - xi + 1;
    weights[mid_level - 1] +=
        (m * l - (xi - 1) * total) as f64 / (total as f64 * l as f64);
    weights[0] += (total - m) as f64 / total as f64;
    Ok(weights)
}

/// Evaluates the mixture at a point; levels with zero weight are never
/// evaluated.
pub fn compose_hnh_value<F: FidelityLevels + ?Sized>(
    levels: &F,
    m: usize,
    total: usize,
    z: &[f64],
) -> Result<f64, HnhError> {
    let weights = mixture_weights(m, total, levels.levels())?;
    let mut acc = 0.0;
    for (idx, &w) in weights.iter().enumerate() {
        if w != 0.0 {
            acc += w * levels.eval_level(idx + 1, z)?;
        }
    }
    Ok(acc)
}

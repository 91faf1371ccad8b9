//! Empirical misclassification diagnostic: per level, the rate of samples
//! the surrogate pushes above a threshold while the true model fails,
//! against the sigmoid-shaped reference bound. Purely informational.

use serde::{Deserialize, Serialize};

use super::HnhError;
use crate::estimator::{FailureLabelVector, SampleBatch};
use crate::surrogate::FidelityLevels;

/// Bound parameters. The reference bound at threshold eta for level l is
/// `(1/C * 1 / (1 + exp(a * eta / eta_max)))^l` with
/// `eta_max = G_((1-rho) M)` taken from the sorted |g1| values, and the
/// fitted threshold for a target eps is
/// `eta_t = ln(1 / (C eps)) * eta_max / a`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsConfig {
    pub c: f64,
    pub a: f64,
    pub rho: f64,
    pub target_eps: f64,
}

impl DiagnosticsConfig {
    pub fn validate(&self) -> Result<(), HnhError> {
        if !(self.c > 1.0) {
            return Err(HnhError::InvalidDiagnostics(format!(
                "C must exceed 1, got {}",
                self.c
            )));
        }
        if !(self.a > 1.0) {
            return Err(HnhError::InvalidDiagnostics(format!(
                "a must exceed 1, got {}",
                self.a
            )));
        }
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return Err(HnhError::InvalidDiagnostics(format!(
                "rho must lie in (0, 1), got {}",
                self.rho
            )));
        }
        if !(self.target_eps > 0.0) {
            return Err(HnhError::InvalidDiagnostics(format!(
                "target eps must be positive, got {}",
                self.target_eps
            )));
        }
        Ok(())
    }

    /// Single-level bound value at threshold `eta`.
    pub fn bound(&self, eta: f64, eta_max: f64, level: usize) -> f64 {
        let x = eta / eta_max;
        ((1.0 / self.c) * 1.0 / (1.0 + (self.a * x).exp())).powi(level as i32)
    }

    /// Threshold implied by the target eps (the inversion of the bound's
    /// exponential tail).
    pub fn eta_t(&self, eta_max: f64) -> f64 {
        (1.0 / (self.c * self.target_eps)).ln() * eta_max / self.a
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticPoint {
    pub eta: f64,
    pub empirical_rate: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelCurve {
    pub level: usize,
    pub points: Vec<DiagnosticPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticReport {
    pub eta_max: f64,
    pub eta_t: f64,
    pub config: DiagnosticsConfig,
    pub levels: Vec<LevelCurve>,
}

/// Sweeps thresholds over the quantiles of |g1| and reports, per level, the
/// empirical rate of `{g_l > eta} and {true failure}` next to the reference
/// bound. Oracle labels must come from the true model on the same batch.
pub fn misclassification_diagnostic<F: FidelityLevels + ?Sized>(
    levels: &F,
    batch: &SampleBatch,
    oracle_labels: &FailureLabelVector,
    diag: &DiagnosticsConfig,
) -> Result<DiagnosticReport, HnhError> {
    diag.validate()?;
    let l = levels.levels();
    if l == 0 {
        return Err(HnhError::NoLevels);
    }
    let m = batch.len();
    if oracle_labels.len() != m {
        return Err(HnhError::Estimator(
            crate::estimator::EstimatorError::LengthMismatch {
                labels: oracle_labels.len(),
                batch: m,
            },
        ));
    }

    let g1 = levels.eval_level_batch(1, batch.values.view())?;
    let mut sorted_abs: Vec<f64> = g1.iter().map(|v| v.abs()).collect();
    sorted_abs.sort_by(|a, b| a.total_cmp(b));

    // order statistic G_((1-rho) M), 1-based, clamped
    let order_index = (((1.0 - diag.rho) * m as f64).ceil() as usize)
        .clamp(1, m)
        - 1;
    let eta_max = sorted_abs[order_index].max(f64::MIN_POSITIVE);
    let eta_t = diag.eta_t(eta_max);

    // threshold grid: 21 quantiles of |g1|
    let grid: Vec<f64> = (0..=20)
        .map(|j| {
            let q = j as f64 / 20.0;
            let idx = ((m - 1) as f64 * q).round() as usize;
            sorted_abs[idx]
        })
        .collect();

    let mut curves = Vec::with_capacity(l);
    for level in 1..=l {
        let values = levels.eval_level_batch(level, batch.values.view())?;
        let points: Vec<DiagnosticPoint> = grid
            .iter()
            .map(|&eta| {
                let count = values
                    .iter()
                    .zip(oracle_labels.labels())
                    .filter(|(&v, &fail)| v > eta && fail == 1)
                    .count();
                DiagnosticPoint {
                    eta,
                    empirical_rate: count as f64 / m as f64,
                    bound: diag.bound(eta, eta_max, level),
                }
            })
            .collect();
        curves.push(LevelCurve { level, points });
    }

    Ok(DiagnosticReport {
        eta_max,
        eta_t,
        config: *diag,
        levels: curves,
    })
}

//! Concrete limit-state models: an analytic structural-safety benchmark, a
//! stochastic diffusion FEM with a Karhunen-Loeve random field, and a
//! Helmholtz finite-difference solver.
//!
//! Everything follows one sign convention: failure means `g(z) < 0`.
//! Threshold-exceedance events `u > c` are wrapped as `g = c - u`.

mod benchmark;
mod diffusion;
mod grid;
mod helmholtz;
mod kl;
pub(crate) mod linalg;

pub use benchmark::{benchmark_evaluate, BenchmarkModel};
pub use diffusion::{diffusion_solve, DiffusionModel, DiffusionSpec};
pub use grid::{sensor_read, Grid, GridField};
pub use helmholtz::{helmholtz_solve, HelmholtzModel, HelmholtzSpec};
pub use kl::{kl_build, kl_realize, KLField, XiDistribution};

use thiserror::Error;

/// Whether one evaluation is cheap arithmetic or a PDE solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CostClass {
    Analytic,
    PdeSolve,
}

/// Abstraction over "evaluate g(z)": deterministic, total on finite inputs,
/// negative values mean failure.
pub trait LimitStateModel: Sync {
    fn dim(&self) -> usize;
    fn evaluate(&self, z: &[f64]) -> Result<f64, ModelError>;
    fn cost_class(&self) -> CostClass;
}

/// Errors from model evaluation and the PDE solvers behind them.
#[derive(Debug, Error)]
pub enum ModelError {
    #[error("input has dimension {got}, model expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("realized coefficient not positive: min {min:.3e} at grid node ({ix}, {iy})")]
    NonPositiveCoefficient { min: f64, ix: usize, iy: usize },
    #[error("truncation order {requested} exceeds available eigenpairs {available}")]
    TruncationTooLarge { requested: usize, available: usize },
    #[error("linear solver did not converge: relative residual {residual:.3e} after {iterations} iterations")]
    SolverDiverged {
        residual: f64,
        iterations: usize,
        history: Vec<f64>,
    },
    #[error("near-singular system: pivot magnitude {pivot:.3e} below tolerance (resonance)")]
    Resonance { pivot: f64 },
    #[error("point ({x}, {y}) outside the grid domain")]
    OutOfDomain { x: f64, y: f64 },
    #[error("invalid model setup: {0}")]
    InvalidSetup(String),
}

/// Wraps a solver + sensor as a limit state: `g(xi) = threshold - u(sensor)`,
/// so failure (`g < 0`) is exactly the exceedance `u(sensor) > threshold`.
pub struct SensorThresholdModel<F> {
    dim: usize,
    threshold: f64,
    eval_sensor: F,
}

impl<F> SensorThresholdModel<F>
where
    F: Fn(&[f64]) -> Result<f64, ModelError> + Sync,
{
    pub fn new(dim: usize, threshold: f64, eval_sensor: F) -> Self {
        SensorThresholdModel {
            dim,
            threshold,
            eval_sensor,
        }
    }
}

impl<F> LimitStateModel for SensorThresholdModel<F>
where
    F: Fn(&[f64]) -> Result<f64, ModelError> + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn evaluate(&self, z: &[f64]) -> Result<f64, ModelError> {
        if z.len() != self.dim {
            return Err(ModelError::DimensionMismatch {
                expected: self.dim,
                got: z.len(),
            });
        }
        Ok(self.threshold - (self.eval_sensor)(z)?)
    }

    fn cost_class(&self) -> CostClass {
        CostClass::PdeSolve
    }
}

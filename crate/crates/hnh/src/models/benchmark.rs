//! High-dimensional structural-safety benchmark: the limit state is a shifted
//! sum of iid standard normals, `g(z) = beta * sqrt(n) - sum_i z_i`, so the
//! failure probability has the closed form `Phi(-beta)`.

use serde::{Deserialize, Serialize};

use super::{CostClass, LimitStateModel, ModelError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkModel {
    pub beta: f64,
    pub n: usize,
}

impl BenchmarkModel {
    pub fn new(beta: f64, n: usize) -> Result<Self, ModelError> {
        if n == 0 {
            return Err(ModelError::InvalidSetup("n must be at least 1".into()));
        }
        Ok(BenchmarkModel { beta, n })
    }
}

pub fn benchmark_evaluate(model: &BenchmarkModel, z: &[f64]) -> Result<f64, ModelError> {
    if z.len() != model.n {
        return Err(ModelError::DimensionMismatch {
            expected: model.n,
            got: z.len(),
        });
    }
    let sum: f64 = z.iter().sum();
    Ok(model.beta * (model.n as f64).sqrt() - sum)
}

impl LimitStateModel for BenchmarkModel {
    fn dim(&self) -> usize {
        self.n
    }

    fn evaluate(&self, z: &[f64]) -> Result<f64, ModelError> {
        benchmark_evaluate(self, z)
    }

    fn cost_class(&self) -> CostClass {
        CostClass::Analytic
    }
}

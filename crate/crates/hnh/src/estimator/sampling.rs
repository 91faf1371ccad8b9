//! Parameter distributions and reproducible sample generation.

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use super::EstimatorError;

/// Law of the random input vector. Coordinates are drawn independently.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ParameterDistribution {
    /// Each coordinate standard normal N(0, 1).
    IidStandardNormal { dim: usize },
    /// Each coordinate uniform on [lo, hi].
    IidUniform { dim: usize, lo: f64, hi: f64 },
}

impl ParameterDistribution {
    pub fn standard_normal(dim: usize) -> Self {
        ParameterDistribution::IidStandardNormal { dim }
    }

    pub fn uniform(dim: usize, lo: f64, hi: f64) -> Self {
        ParameterDistribution::IidUniform { dim, lo, hi }
    }

    pub fn dim(&self) -> usize {
        match self {
            ParameterDistribution::IidStandardNormal { dim } => *dim,
            ParameterDistribution::IidUniform { dim, .. } => *dim,
        }
    }

    pub fn validate(&self) -> Result<(), EstimatorError> {
        if self.dim() == 0 {
            return Err(EstimatorError::InvalidDistribution(
                "dimension must be at least 1".into(),
            ));
        }
        if let ParameterDistribution::IidUniform { lo, hi, .. } = self {
            if !(lo < hi) {
                return Err(EstimatorError::InvalidDistribution(format!(
                    "uniform bounds must satisfy lo < hi, got [{lo}, {hi}]"
                )));
            }
        }
        Ok(())
    }
}

/// M parameter vectors drawn from a declared distribution, with seed
/// provenance. Regenerating with the same `(distribution, M, seed)`
/// reproduces `values` bit-exactly.
#[derive(Debug, Clone)]
pub struct SampleBatch {
    /// M x d matrix; row i is sample i.
    pub values: Array2<f64>,
    pub seed: u64,
    pub distribution: ParameterDistribution,
}

impl SampleBatch {
    /// Wraps an existing matrix (fixtures, replay). All entries must be finite.
    pub fn from_matrix(
        values: Array2<f64>,
        distribution: ParameterDistribution,
        seed: u64,
    ) -> Result<Self, EstimatorError> {
        distribution.validate()?;
        if values.ncols() != distribution.dim() {
            return Err(EstimatorError::InvalidDistribution(format!(
                "matrix has {} columns but distribution dimension is {}",
                values.ncols(),
                distribution.dim()
            )));
        }
        if let Some((index, _)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(EstimatorError::NonFiniteSurrogate {
                index: index / values.ncols(),
            });
        }
        Ok(SampleBatch {
            values,
            seed,
            distribution,
        })
    }

    pub fn len(&self) -> usize {
        self.values.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.values.ncols()
    }

    /// Row view of sample `i` as a slice.
    pub fn row(&self, i: usize) -> ndarray::ArrayView1<'_, f64> {
        self.values.row(i)
    }
}

/// Draws `m` samples from `dist`, deterministic in `(dist, m, seed)`.
///
/// The generator is the ChaCha12 counter-based stream cipher seeded with
/// `seed`; entries are filled row-major (sample-major), so sample i always
/// consumes the same generator positions regardless of batch splitting
/// elsewhere. Normal variates come from the ziggurat sampler, uniform
/// variates from the half-open-range sampler of the `rand_distr` crate.
pub fn sample(
    dist: &ParameterDistribution,
    m: usize,
    seed: u64,
) -> Result<SampleBatch, EstimatorError> {
    dist.validate()?;
    if m == 0 {
        return Err(EstimatorError::InvalidDistribution(
            "sample count must be at least 1".into(),
        ));
    }
    let d = dist.dim();
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut values = Array2::<f64>::zeros((m, d));
    match dist {
        ParameterDistribution::IidStandardNormal { .. } => {
            for v in values.iter_mut() {
                *v = StandardNormal.sample(&mut rng);
            }
        }
        ParameterDistribution::IidUniform { lo, hi, .. } => {
            let u = Uniform::new_inclusive(*lo, *hi).map_err(|e| {
                EstimatorError::InvalidDistribution(format!("uniform sampler: {e}"))
            })?;
            for v in values.iter_mut() {
                *v = u.sample(&mut rng);
            }
        }
    }
    Ok(SampleBatch {
        values,
        seed,
        distribution: dist.clone(),
    })
}

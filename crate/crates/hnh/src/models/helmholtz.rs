//! Helmholtz limit state: five-point finite differences for
//! `-laplace(u) - k^2 u = 0` on the unit square, driven by inhomogeneous
//! Dirichlet data `u = amplitude * sin(pi y)` on the left edge and `u = 0`
//! on the other three sides. The wavenumber field is a KL-perturbed
//! constant, `k(x, xi) = k0 * (1 + sum_k sqrt(lambda_k) a_k(x) xi_k)`.

use serde::{Deserialize, Serialize};

use super::kl::kl_realize_with_floor;
use super::linalg::BandMatrix;
use super::{sensor_read, CostClass, Grid, GridField, KLField, LimitStateModel, ModelError};

const PIVOT_TOL: f64 = 1e-12;
const RESIDUAL_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct HelmholtzModel {
    pub field: KLField,
    pub k0: f64,
    pub forcing_amplitude: f64,
    pub sensor: (f64, f64),
    pub threshold: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HelmholtzSpec {
    pub grid_n: usize,
    pub sigma: f64,
    pub corr_len: f64,
    pub truncation: usize,
    pub k0: f64,
    pub forcing_amplitude: f64,
    pub sensor: (f64, f64),
    pub threshold: f64,
}

impl HelmholtzModel {
    pub fn from_spec(spec: &HelmholtzSpec) -> Result<Self, ModelError> {
        let grid = Grid::unit_square(spec.grid_n);
        // Perturbation field has unit mean so k = k0 * realization.
        let field = super::kl_build(1.0, spec.sigma, spec.corr_len, grid, spec.truncation)?;
        Ok(HelmholtzModel {
            field,
            k0: spec.k0,
            forcing_amplitude: spec.forcing_amplitude,
            sensor: spec.sensor,
            threshold: spec.threshold,
        })
    }

    /// Wavenumber field for one realization (no positivity floor; only the
    /// factorization pivot guards against resonance).
    pub fn wavenumber(&self, xi: &[f64]) -> Result<GridField, ModelError> {
        let mut k = kl_realize_with_floor(&self.field, xi, None)?;
        k.values.mapv_inplace(|v| v * self.k0);
        Ok(k)
    }

    pub fn sensor_value(&self, xi: &[f64]) -> Result<f64, ModelError> {
        let k = self.wavenumber(xi)?;
        let u = helmholtz_solve(&self.field.grid, &k, self.forcing_amplitude)?;
        sensor_read(&u, self.sensor.0, self.sensor.1)
    }
}

impl LimitStateModel for HelmholtzModel {
    fn dim(&self) -> usize {
        self.field.truncation()
    }

    fn evaluate(&self, z: &[f64]) -> Result<f64, ModelError> {
        Ok(self.threshold - self.sensor_value(z)?)
    }

    fn cost_class(&self) -> CostClass {
        CostClass::PdeSolve
    }
}

/// Solves `-laplace(u) - k^2 u = 0` with the left-edge forcing by direct
/// banded LU (the system is indefinite). Errors on pivots below tolerance
/// (resonance) and on residuals above 1e-10 relative.
pub fn helmholtz_solve(
    grid: &Grid,
    k_field: &GridField,
    forcing_amplitude: f64,
) -> Result<GridField, ModelError> {
    let nx = grid.nx;
    let ny = grid.ny;
    if k_field.grid != *grid {
        return Err(ModelError::InvalidSetup(
            "wavenumber grid does not match model grid".into(),
        ));
    }
    if (grid.hx() - grid.hy()).abs() > 1e-14 * grid.hx() {
        return Err(ModelError::InvalidSetup(
            "stencil assumes square cells (hx == hy)".into(),
        ));
    }
    if k_field.values.iter().any(|v| !v.is_finite()) {
        return Err(ModelError::InvalidSetup(
            "wavenumber field contains non-finite values".into(),
        ));
    }

    let h = grid.hx();
    let h2 = h * h;
    let boundary = |ix: usize, iy: usize| -> Option<f64> {
        if ix == 0 {
            Some(forcing_amplitude * (std::f64::consts::PI * grid.y(iy)).sin())
        } else if ix == nx - 1 || iy == 0 || iy == ny - 1 {
            Some(0.0)
        } else {
            None
        }
    };

    // Interior unknowns, x fastest. Bandwidth is the interior row length.
    let mx = nx - 2;
    let my = ny - 2;
    let n = mx * my;
    let unknown = |ix: usize, iy: usize| (ix - 1) + (iy - 1) * mx;

    let bw = mx;
    let mut a = BandMatrix::zeros(n, bw, bw);
    let mut rhs = vec![0.0; n];

    for iy in 1..ny - 1 {
        for ix in 1..nx - 1 {
            let row = unknown(ix, iy);
            let k = k_field.values[[ix, iy]];
            a.set(row, row, 4.0 / h2 - k * k);
            for (jx, jy) in [(ix - 1, iy), (ix + 1, iy), (ix, iy - 1), (ix, iy + 1)] {
                match boundary(jx, jy) {
                    Some(value) => rhs[row] += value / h2,
                    None => a.set(row, unknown(jx, jy), -1.0 / h2),
                }
            }
        }
    }

    let operator = a.clone();
    let lu = a.factor(PIVOT_TOL)?;
    let x = lu.solve(&rhs);

    // Residual check against the unfactored operator.
    let mut ax = vec![0.0; n];
    operator.mul_vec(&x, &mut ax);
    let norm_b: f64 = rhs.iter().map(|v| v * v).sum::<f64>().sqrt();
    let res: f64 = ax
        .iter()
        .zip(&rhs)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    if norm_b > 0.0 && res / norm_b > RESIDUAL_TOL {
        return Err(ModelError::SolverDiverged {
            residual: res / norm_b,
            iterations: 1,
            history: vec![res / norm_b],
        });
    }

    let mut u = GridField::zeros(*grid);
    for iy in 0..ny {
        for ix in 0..nx {
            u.values[[ix, iy]] = match boundary(ix, iy) {
                Some(value) => value,
                None => x[unknown(ix, iy)],
            };
        }
    }
    Ok(u)
}

//! Stochastic diffusion limit state: bilinear (Q1) Galerkin solve of
//! `-div(a grad u) = 1` on the unit square with `u = 0` on the left/right
//! boundaries and zero flux on top/bottom, sensed at one point.

use serde::{Deserialize, Serialize};

use super::linalg::{pcg_solve, CsrMatrix};
use super::{
    kl_realize, sensor_read, CostClass, Grid, GridField, KLField, LimitStateModel, ModelError,
};

const REL_TOL: f64 = 1e-10;
const MAX_ITERS: usize = 20_000;

/// Diffusion problem specification. The sensor must lie inside the domain.
#[derive(Debug, Clone)]
pub struct DiffusionModel {
    pub field: KLField,
    pub sensor: (f64, f64),
    pub threshold: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiffusionSpec {
    pub grid_n: usize,
    pub sigma: f64,
    pub corr_len: f64,
    pub truncation: usize,
    pub mean: f64,
    pub sensor: (f64, f64),
    pub threshold: f64,
}

impl DiffusionModel {
    pub fn from_spec(spec: &DiffusionSpec) -> Result<Self, ModelError> {
        let grid = Grid::unit_square(spec.grid_n);
        let field = super::kl_build(spec.mean, spec.sigma, spec.corr_len, grid, spec.truncation)?;
        DiffusionModel::new(field, spec.sensor, spec.threshold)
    }

    pub fn new(field: KLField, sensor: (f64, f64), threshold: f64) -> Result<Self, ModelError> {
        let g = field.grid;
        if sensor.0 <= g.xmin || sensor.0 >= g.xmax || sensor.1 <= g.ymin || sensor.1 >= g.ymax {
            return Err(ModelError::OutOfDomain {
                x: sensor.0,
                y: sensor.1,
            });
        }
        Ok(DiffusionModel {
            field,
            sensor,
            threshold,
        })
    }

    /// Solution value at the sensor for one coefficient realization.
    pub fn sensor_value(&self, xi: &[f64]) -> Result<f64, ModelError> {
        let a = kl_realize(&self.field, xi)?;
        let u = diffusion_solve(&self.field.grid, &a)?;
        sensor_read(&u, self.sensor.0, self.sensor.1)
    }
}

impl LimitStateModel for DiffusionModel {
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

/// Assembles and solves the Q1 Galerkin system for `-div(a grad u) = 1`.
///
/// The coefficient is sampled at each element midpoint (bilinear average of
/// its four corners), which keeps second-order accuracy; integration uses
/// the exact constant-coefficient element matrix. Dirichlet rows are
/// eliminated symmetrically, the SPD system is solved by Jacobi-PCG to a
/// 1e-10 relative residual.
pub fn diffusion_solve(grid: &Grid, a_field: &GridField) -> Result<GridField, ModelError> {
    let (matrix, rhs) = assemble_diffusion(grid, a_field)?;
    let solution = pcg_solve(&matrix, &rhs, REL_TOL, MAX_ITERS)?;

    let mut u = GridField::zeros(*grid);
    for iy in 0..grid.ny {
        for ix in 0..grid.nx {
            u.values[[ix, iy]] = solution[grid.node(ix, iy)];
        }
    }
    Ok(u)
}

pub(crate) fn assemble_diffusion(
    grid: &Grid,
    a_field: &GridField,
) -> Result<(CsrMatrix, Vec<f64>), ModelError> {
    let nx = grid.nx;
    let ny = grid.ny;
    if a_field.grid != *grid {
        return Err(ModelError::InvalidSetup(
            "coefficient grid does not match model grid".into(),
        ));
    }
    if a_field.values.iter().any(|&v| !(v > 0.0)) {
        let mut min = f64::INFINITY;
        let mut at = (0, 0);
        for iy in 0..ny {
            for ix in 0..nx {
                if a_field.values[[ix, iy]] < min {
                    min = a_field.values[[ix, iy]];
                    at = (ix, iy);
                }
            }
        }
        return Err(ModelError::NonPositiveCoefficient {
            min,
            ix: at.0,
            iy: at.1,
        });
    }

    if (grid.hx() - grid.hy()).abs() > 1e-14 * grid.hx() {
        return Err(ModelError::InvalidSetup(
            "assembly assumes square elements (hx == hy)".into(),
        ));
    }

    let n = grid.nodes();
    let dirichlet = |ix: usize| ix == 0 || ix == nx - 1;

    // Exact Q1 element stiffness for constant coefficient on a square
    // element, nodes ordered SW, SE, NE, NW. Scaled by a_e / 6.
    const K_REF: [[f64; 4]; 4] = [
        [4.0, -1.0, -2.0, -1.0],
        [-1.0, 4.0, -1.0, -2.0],
        [-2.0, -1.0, 4.0, -1.0],
        [-1.0, -2.0, -1.0, 4.0],
    ];

    let hx = grid.hx();
    let hy = grid.hy();
    let load = hx * hy / 4.0;

    let mut triplets: Vec<(usize, usize, f64)> = Vec::with_capacity(16 * (nx - 1) * (ny - 1));
    let mut rhs = vec![0.0; n];

    for ey in 0..ny - 1 {
        for ex in 0..nx - 1 {
            let nodes = [
                grid.node(ex, ey),
                grid.node(ex + 1, ey),
                grid.node(ex + 1, ey + 1),
                grid.node(ex, ey + 1),
            ];
            let node_ix = [ex, ex + 1, ex + 1, ex];
            // coefficient at the element midpoint = average of the corners
            let a_e = 0.25
                * (a_field.values[[ex, ey]]
                    + a_field.values[[ex + 1, ey]]
                    + a_field.values[[ex + 1, ey + 1]]
                    + a_field.values[[ex, ey + 1]]);
            let scale = a_e / 6.0;
            for i in 0..4 {
                let ri = nodes[i];
                if dirichlet(node_ix[i]) {
                    continue;
                }
                rhs[ri] += load;
                for j in 0..4 {
                    let cj = nodes[j];
                    if dirichlet(node_ix[j]) {
                        // boundary value is zero: nothing moves to the rhs
                        continue;
                    }
                    triplets.push((ri, cj, scale * K_REF[i][j]));
                }
            }
        }
    }
    // Identity rows for constrained nodes keep the indexing simple.
    for iy in 0..ny {
        for ix in [0, nx - 1] {
            let m = grid.node(ix, iy);
            triplets.push((m, m, 1.0));
            rhs[m] = 0.0;
        }
    }

    Ok((CsrMatrix::from_triplets(n, &triplets), rhs))
}

//! Karhunen-Loeve expansion of a random field with separable exponential
//! covariance `sigma^2 * exp(-|x1-y1|/L - |x2-y2|/L)` on a tensor grid.
//!
//! The 2-d eigenpairs are products of 1-d eigenpairs: two small Nystrom
//! problems (one per direction) with trapezoid quadrature weights, combined
//! as `lambda_(a,b) = sigma^2 * mu_a * mu_b`, sorted descending.

use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::{Array1, Array2};

use super::{Grid, GridField, ModelError};

/// Coefficient floor below which a realized diffusion field is rejected.
pub const DEFAULT_MIN_COEFF: f64 = 1e-6;

/// Law of the KL coefficient variables `xi_k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum XiDistribution {
    /// iid uniform on [-1, 1]; keeps the realized field positive for the
    /// diffusion setup (variance of each xi is 1/3).
    Uniform,
    /// iid standard normal; requires the positivity guard.
    Gaussian,
}

/// Truncated KL representation of a random field on a grid.
#[derive(Debug, Clone)]
pub struct KLField {
    pub grid: Grid,
    /// Constant mean a_0.
    pub mean: f64,
    pub sigma: f64,
    pub corr_len: f64,
    /// Eigenvalues of the covariance operator, descending, length d.
    pub eigenvalues: Vec<f64>,
    /// Row k holds eigenfunction a_k sampled on the grid (node-flattened,
    /// x fastest), orthonormal under trapezoid quadrature.
    pub eigenfunctions: Array2<f64>,
    /// Fraction of the total variance sigma^2 captured by the d terms.
    pub captured_variance_ratio: f64,
}

/// 1-d Nystrom eigenpairs of `exp(-|s-t|/corr_len)` on `n` uniform points.
/// Returns (eigenvalues descending, eigenfunction matrix with one function
/// per row, quadrature weights).
fn nystrom_1d(n: usize, lo: f64, hi: f64, corr_len: f64) -> (Vec<f64>, Array2<f64>, Vec<f64>) {
    let h = (hi - lo) / (n - 1) as f64;
    let mut w = vec![h; n];
    w[0] = h / 2.0;
    w[n - 1] = h / 2.0;
    let sqrt_w: Vec<f64> = w.iter().map(|v| v.sqrt()).collect();

    // Symmetrized kernel B = W^{1/2} C W^{1/2}
    let b = DMatrix::from_fn(n, n, |i, j| {
        let xi = lo + i as f64 * h;
        let xj = lo + j as f64 * h;
        sqrt_w[i] * (-(xi - xj).abs() / corr_len).exp() * sqrt_w[j]
    });
    let eig = SymmetricEigen::new(b);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    let mut mu = Vec::with_capacity(n);
    let mut funcs = Array2::<f64>::zeros((n, n));
    for (k, &src) in order.iter().enumerate() {
        mu.push(eig.eigenvalues[src].max(0.0));
        let col = eig.eigenvectors.column(src);
        // Deterministic sign: largest-magnitude component positive.
        let mut dominant = 0;
        for i in 1..n {
            if col[i].abs() > col[dominant].abs() {
                dominant = i;
            }
        }
        let sign = if col[dominant] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n {
            funcs[[k, i]] = sign * col[i] / sqrt_w[i];
        }
    }
    (mu, funcs, w)
}

/// Builds the truncated KL field: top `d` tensor-product eigenpairs of the
/// separable exponential covariance, with the captured-variance ratio
/// relative to the total `sigma^2 * |D|` (unit measure after quadrature).
pub fn kl_build(
    mean: f64,
    sigma: f64,
    corr_len: f64,
    grid: Grid,
    d: usize,
) -> Result<KLField, ModelError> {
    if corr_len <= 0.0 {
        return Err(ModelError::InvalidSetup(format!(
            "correlation length must be positive, got {corr_len}"
        )));
    }
    if d == 0 {
        return Err(ModelError::InvalidSetup(
            "truncation order must be at least 1".into(),
        ));
    }
    let available = grid.nx * grid.ny;
    if d > available {
        return Err(ModelError::TruncationTooLarge {
            requested: d,
            available,
        });
    }

    let (mu_x, f_x, _wx) = nystrom_1d(grid.nx, grid.xmin, grid.xmax, corr_len);
    let (mu_y, f_y, _wy) = if grid.ny == grid.nx && grid.ymin == grid.xmin && grid.ymax == grid.xmax
    {
        (mu_x.clone(), f_x.clone(), Vec::new())
    } else {
        nystrom_1d(grid.ny, grid.ymin, grid.ymax, corr_len)
    };

    // All tensor pairs, sorted by descending eigenvalue with a deterministic
    // index tie-break.
    let sigma2 = sigma * sigma;
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(grid.nx * grid.ny);
    for a in 0..grid.nx {
        for b in 0..grid.ny {
            pairs.push((sigma2 * mu_x[a] * mu_y[b], a, b));
        }
    }
    pairs.sort_by(|p, q| q.0.total_cmp(&p.0).then(p.1.cmp(&q.1)).then(p.2.cmp(&q.2)));
    pairs.truncate(d);

    let nodes = grid.nodes();
    let mut eigenvalues = Vec::with_capacity(d);
    let mut eigenfunctions = Array2::<f64>::zeros((d, nodes));
    for (k, &(lambda, a, b)) in pairs.iter().enumerate() {
        eigenvalues.push(lambda);
        for iy in 0..grid.ny {
            let fy = f_y[[b, iy]];
            for ix in 0..grid.nx {
                eigenfunctions[[k, grid.node(ix, iy)]] = f_x[[a, ix]] * fy;
            }
        }
    }

    // Total variance of the field is sigma^2 * |D| with |D| = 1 after the
    // quadrature normalization (weights sum to the side length).
    let domain = (grid.xmax - grid.xmin) * (grid.ymax - grid.ymin);
    let total = sigma2 * domain;
    let captured_variance_ratio = if total > 0.0 {
        eigenvalues.iter().sum::<f64>() / total
    } else {
        1.0
    };

    Ok(KLField {
        grid,
        mean,
        sigma,
        corr_len,
        eigenvalues,
        eigenfunctions,
        captured_variance_ratio,
    })
}

impl KLField {
    pub fn truncation(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Tensor trapezoid quadrature weights, node-flattened like the
    /// eigenfunction rows.
    pub fn quad_weights(&self) -> Array1<f64> {
        let g = &self.grid;
        let mut wx = vec![g.hx(); g.nx];
        wx[0] = g.hx() / 2.0;
        wx[g.nx - 1] = g.hx() / 2.0;
        let mut wy = vec![g.hy(); g.ny];
        wy[0] = g.hy() / 2.0;
        wy[g.ny - 1] = g.hy() / 2.0;
        let mut w = Array1::zeros(g.nodes());
        for iy in 0..g.ny {
            for ix in 0..g.nx {
                w[g.node(ix, iy)] = wx[ix] * wy[iy];
            }
        }
        w
    }
}

/// Realizes the field at coefficients `xi`:
/// `a(x) = a0 + sum_k sqrt(lambda_k) a_k(x) xi_k`, with a positivity guard
/// for use as a diffusion coefficient.
pub fn kl_realize(field: &KLField, xi: &[f64]) -> Result<GridField, ModelError> {
    kl_realize_with_floor(field, xi, Some(DEFAULT_MIN_COEFF))
}

/// Same expansion without (or with a custom) positivity floor; the Helmholtz
/// wavenumber perturbation has no positivity requirement.
pub fn kl_realize_with_floor(
    field: &KLField,
    xi: &[f64],
    floor: Option<f64>,
) -> Result<GridField, ModelError> {
    let d = field.truncation();
    if xi.len() != d {
        return Err(ModelError::DimensionMismatch {
            expected: d,
            got: xi.len(),
        });
    }
    let g = field.grid;
    let nodes = g.nodes();
    let mut flat = vec![field.mean; nodes];
    for k in 0..d {
        let scale = field.eigenvalues[k].sqrt() * xi[k];
        if scale == 0.0 {
            continue;
        }
        let row = field.eigenfunctions.row(k);
        for (node, value) in flat.iter_mut().enumerate() {
            *value += scale * row[node];
        }
    }

    if let Some(min_allowed) = floor {
        let mut min = f64::INFINITY;
        let mut argmin = 0;
        for (node, &value) in flat.iter().enumerate() {
            if value < min {
                min = value;
                argmin = node;
            }
        }
        if min <= min_allowed {
            return Err(ModelError::NonPositiveCoefficient {
                min,
                ix: argmin % g.nx,
                iy: argmin / g.nx,
            });
        }
    }

    let mut out = GridField::zeros(g);
    for iy in 0..g.ny {
        for ix in 0..g.nx {
            out.values[[ix, iy]] = flat[g.node(ix, iy)];
        }
    }
    Ok(out)
}

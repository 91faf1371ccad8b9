//! Uniform tensor grids, nodal fields, point sensors, and the plain-text
//! snapshot format.

use std::fmt::Write as _;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::ModelError;

/// Uniform nx x ny node grid on [xmin, xmax] x [ymin, ymax].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub nx: usize,
    pub ny: usize,
    pub xmin: f64,
    pub xmax: f64,
    pub ymin: f64,
    pub ymax: f64,
}

impl Grid {
    /// Unit-square grid with n nodes per side.
    pub fn unit_square(n: usize) -> Self {
        Grid {
            nx: n,
            ny: n,
            xmin: 0.0,
            xmax: 1.0,
            ymin: 0.0,
            ymax: 1.0,
        }
    }

    pub fn hx(&self) -> f64 {
        (self.xmax - self.xmin) / (self.nx - 1) as f64
    }

    pub fn hy(&self) -> f64 {
        (self.ymax - self.ymin) / (self.ny - 1) as f64
    }

    pub fn x(&self, ix: usize) -> f64 {
        self.xmin + ix as f64 * self.hx()
    }

    pub fn y(&self, iy: usize) -> f64 {
        self.ymin + iy as f64 * self.hy()
    }

    pub fn nodes(&self) -> usize {
        self.nx * self.ny
    }

    /// Flat node index, x fastest: `m = ix + iy * nx`.
    pub fn node(&self, ix: usize, iy: usize) -> usize {
        ix + iy * self.nx
    }
}

/// Nodal scalar field on a grid. `values[[ix, iy]]` is the value at node
/// `(x_ix, y_iy)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    pub grid: Grid,
    pub values: Array2<f64>,
}

impl GridField {
    pub fn zeros(grid: Grid) -> Self {
        GridField {
            values: Array2::zeros((grid.nx, grid.ny)),
            grid,
        }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64) -> f64) -> Self {
        let values = Array2::from_shape_fn((grid.nx, grid.ny), |(ix, iy)| {
            f(grid.x(ix), grid.y(iy))
        });
        GridField { grid, values }
    }

    /// Serializes to the plain-text snapshot format: a header with the grid
    /// shape and extents, then values row-major (one y-row per line).
    pub fn to_text(&self) -> String {
        let g = &self.grid;
        let mut out = String::new();
        writeln!(out, "nx {}", g.nx).unwrap();
        writeln!(out, "ny {}", g.ny).unwrap();
        writeln!(out, "xmin {:e} xmax {:e}", g.xmin, g.xmax).unwrap();
        writeln!(out, "ymin {:e} ymax {:e}", g.ymin, g.ymax).unwrap();
        for iy in 0..g.ny {
            let row: Vec<String> = (0..g.nx)
                .map(|ix| format!("{:e}", self.values[[ix, iy]]))
                .collect();
            writeln!(out, "{}", row.join(" ")).unwrap();
        }
        out
    }
}

/// Bilinear interpolation of a nodal field at an interior point. Points on
/// grid nodes return the exact nodal value; bilinear interpolation
/// reproduces linear fields exactly.
pub fn sensor_read(field: &GridField, x: f64, y: f64) -> Result<f64, ModelError> {
    let g = &field.grid;
    if x < g.xmin || x > g.xmax || y < g.ymin || y > g.ymax {
        return Err(ModelError::OutOfDomain { x, y });
    }
    let fx = (x - g.xmin) / g.hx();
    let fy = (y - g.ymin) / g.hy();
    let ix = (fx.floor() as usize).min(g.nx - 2);
    let iy = (fy.floor() as usize).min(g.ny - 2);
    let tx = fx - ix as f64;
    let ty = fy - iy as f64;
    let v00 = field.values[[ix, iy]];
    let v10 = field.values[[ix + 1, iy]];
    let v01 = field.values[[ix, iy + 1]];
    let v11 = field.values[[ix + 1, iy + 1]];
    Ok(v00 * (1.0 - tx) * (1.0 - ty)
        + v10 * tx * (1.0 - ty)
        + v01 * (1.0 - tx) * ty
        + v11 * tx * ty)
}

//! Sparse and banded linear algebra used by the PDE solvers: CSR storage with
//! Jacobi-preconditioned conjugate gradients for SPD systems, and banded LU
//! with partial pivoting for indefinite ones.

use super::ModelError;

/// Compressed sparse row matrix assembled from (row, col, value) triplets.
#[derive(Debug, Clone)]
pub struct CsrMatrix {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds CSR from triplets, summing duplicates. Column indices within a
    /// row come out sorted, so the assembly order does not affect the result.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut per_row: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for &(r, c, v) in triplets {
            per_row[r].push((c, v));
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for row in &mut per_row {
            row.sort_by_key(|(c, _)| *c);
            let mut iter = row.iter().peekable();
            while let Some(&(c, v)) = iter.next() {
                let mut acc = v;
                while let Some(&&(c2, v2)) = iter.peek() {
                    if c2 == c {
                        acc += v2;
                        iter.next();
                    } else {
                        break;
                    }
                }
                col_idx.push(c);
                values.push(acc);
            }
            row_ptr.push(col_idx.len());
        }
        CsrMatrix {
            n,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        debug_assert_eq!(y.len(), self.n);
        for r in 0..self.n {
            let mut acc = 0.0;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            y[r] = acc;
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n];
        for r in 0..self.n {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                if self.col_idx[k] == r {
                    d[r] = self.values[k];
                }
            }
        }
        d
    }

    /// Max |A[r][c] - A[c][r]| over stored entries.
    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for r in 0..self.n {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let c = self.col_idx[k];
                let v = self.values[k];
                let vt = self.get(c, r);
                worst = worst.max((v - vt).abs());
            }
        }
        worst
    }

    fn get(&self, r: usize, c: usize) -> f64 {
        for k in self.row_ptr[r]..self.row_ptr[r + 1] {
            if self.col_idx[k] == c {
                return self.values[k];
            }
        }
        0.0
    }
}

/// Jacobi-preconditioned conjugate gradients. Converges when
/// ||b - Ax|| <= rel_tol * ||b||; returns the solution or the residual
/// history on failure.
pub fn pcg_solve(
    a: &CsrMatrix,
    b: &[f64],
    rel_tol: f64,
    max_iters: usize,
) -> Result<Vec<f64>, ModelError> {
    let n = a.n;
    let norm_b = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm_b == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let inv_diag: Vec<f64> = a.diagonal().iter().map(|&d| 1.0 / d).collect();

    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(ri, di)| ri * di).collect();
    let mut p = z.clone();
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    let mut ap = vec![0.0; n];
    let mut history = Vec::new();

    for iter in 0..max_iters {
        let res = r.iter().map(|v| v * v).sum::<f64>().sqrt() / norm_b;
        history.push(res);
        if res <= rel_tol {
            return Ok(x);
        }
        a.mul_vec(&p, &mut ap);
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        if pap <= 0.0 {
            return Err(ModelError::SolverDiverged {
                residual: res,
                iterations: iter,
                history,
            });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    let res = r.iter().map(|v| v * v).sum::<f64>().sqrt() / norm_b;
    history.push(res);
    if res <= rel_tol {
        Ok(x)
    } else {
        Err(ModelError::SolverDiverged {
            residual: res,
            iterations: max_iters,
            history,
        })
    }
}

/// Band matrix in LAPACK-style banded storage with room for fill-in from
/// partial pivoting: `store[kl + ku + r - c][c] = A[r][c]` for
/// `|r - c| <= max(kl, ku)` plus `kl` extra superdiagonals.
#[derive(Debug, Clone)]
pub struct BandMatrix {
    pub n: usize,
    pub kl: usize,
    pub ku: usize,
    /// (2*kl + ku + 1) band rows by n columns; entry (r, c) lives in band
    /// row `kl + ku + r - c`.
    store: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        BandMatrix {
            n,
            kl,
            ku,
            store: vec![0.0; (2 * kl + ku + 1) * n],
        }
    }

    #[inline]
    fn idx(&self, r: usize, c: usize) -> usize {
        (self.kl + self.ku + r - c) * self.n + c
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        debug_assert!(r + self.ku >= c && c + self.kl >= r, "outside band");
        let i = self.idx(r, c);
        self.store[i] = v;
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        // Reads cover the widened band (ku + kl superdiagonals) that partial
        // pivoting can fill.
        if r > c + self.kl || c > r + self.ku + self.kl {
            return 0.0;
        }
        self.store[self.idx(r, c)]
    }

    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        for r in 0..self.n {
            let lo = r.saturating_sub(self.kl);
            let hi = (r + self.ku).min(self.n - 1);
            let mut acc = 0.0;
            for c in lo..=hi {
                acc += self.get(r, c) * x[c];
            }
            y[r] = acc;
        }
    }

    /// In-place banded LU with partial pivoting (row swaps only reach `kl`
    /// rows down, fill-in stays inside the widened band). Errors with the
    /// offending pivot magnitude when it falls below `pivot_tol` relative to
    /// the largest initial entry.
    pub fn factor(mut self, pivot_tol: f64) -> Result<BandLu, ModelError> {
        let n = self.n;
        let kl = self.kl;
        let scale = self
            .store
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()))
            .max(f64::MIN_POSITIVE);
        let mut pivots = vec![0usize; n];

        for k in 0..n {
            // pivot search in column k, rows k..=k+kl
            let last = (k + kl).min(n - 1);
            let mut piv_row = k;
            let mut piv_val = self.get(k, k).abs();
            for r in (k + 1)..=last {
                let v = self.get(r, k).abs();
                if v > piv_val {
                    piv_val = v;
                    piv_row = r;
                }
            }
            if piv_val < pivot_tol * scale {
                return Err(ModelError::Resonance { pivot: piv_val });
            }
            pivots[k] = piv_row;
            if piv_row != k {
                // swap rows k and piv_row across the active band columns
                let hi = (k + self.ku + kl).min(n - 1);
                for c in k..=hi {
                    let a = self.get(k, c);
                    let b = self.get(piv_row, c);
                    let ia = self.idx(k, c);
                    self.store[ia] = b;
                    let ib = self.idx(piv_row, c);
                    self.store[ib] = a;
                }
            }
            let pivot = self.get(k, k);
            for r in (k + 1)..=last {
                let factor = self.get(r, k) / pivot;
                let if_ = self.idx(r, k);
                self.store[if_] = factor; // store multiplier in L part
                if factor != 0.0 {
                    let hi = (k + self.ku + kl).min(n - 1);
                    for c in (k + 1)..=hi {
                        let delta = factor * self.get(k, c);
                        let i = self.idx(r, c);
                        self.store[i] -= delta;
                    }
                }
            }
        }
        Ok(BandLu { lu: self, pivots })
    }
}

/// Factored banded system ready for repeated solves.
#[derive(Debug, Clone)]
pub struct BandLu {
    lu: BandMatrix,
    pivots: Vec<usize>,
}

impl BandLu {
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.lu.n;
        let kl = self.lu.kl;
        let ku = self.lu.ku;
        let mut x = b.to_vec();
        // forward: apply pivots and L
        for k in 0..n {
            let p = self.pivots[k];
            if p != k {
                x.swap(k, p);
            }
            let last = (k + kl).min(n - 1);
            for r in (k + 1)..=last {
                x[r] -= self.lu.get(r, k) * x[k];
            }
        }
        // backward: U
        for k in (0..n).rev() {
            let hi = (k + ku + kl).min(n - 1);
            for c in (k + 1)..=hi {
                x[k] -= self.lu.get(k, c) * x[c];
            }
            x[k] /= self.lu.get(k, k);
        }
        x
    }
}

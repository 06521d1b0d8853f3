//! Sparse building blocks for the step solver: a block-CSR matrix, restarted
//! GMRES with a block-Jacobi preconditioner, and a banded LU used by the
//! monolithic direct path.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fem::CsrMatrix;

/// Square block-CSR matrix with dense `b × b` blocks stored row-major.
#[derive(Debug, Clone)]
pub struct BlockSparse {
    pub block: usize,
    pub n: usize,
    pub indptr: Vec<usize>,
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
}

impl BlockSparse {
    /// Zero matrix with the block pattern given by sorted per-row neighbour lists.
    pub fn with_pattern(block: usize, pattern: &[Vec<usize>]) -> Self {
        let n = pattern.len();
        let mut indptr = Vec::with_capacity(n + 1);
        indptr.push(0);
        let mut indices = Vec::new();
        for row in pattern {
            debug_assert!(row.windows(2).all(|w| w[0] < w[1]));
            indices.extend_from_slice(row);
            indptr.push(indices.len());
        }
        let values = vec![0.0; indices.len() * block * block];
        Self {
            block,
            n,
            indptr,
            indices,
            values,
        }
    }

    pub fn dim(&self) -> usize {
        self.n * self.block
    }

    pub fn clear(&mut self) {
        self.values.fill(0.0);
    }

    /// Slot of block `(row, col)`; panics if it is not in the pattern.
    pub fn slot(&self, row: usize, col: usize) -> usize {
        let span = &self.indices[self.indptr[row]..self.indptr[row + 1]];
        self.indptr[row]
            + span
                .binary_search(&col)
                .unwrap_or_else(|_| panic!("block ({row}, {col}) outside pattern"))
    }

    pub fn block_mut(&mut self, slot: usize) -> &mut [f64] {
        let bb = self.block * self.block;
        &mut self.values[slot * bb..(slot + 1) * bb]
    }

    pub fn block_ref(&self, slot: usize) -> &[f64] {
        let bb = self.block * self.block;
        &self.values[slot * bb..(slot + 1) * bb]
    }

    /// `y = A x`, parallel over block rows.
    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        let b = self.block;
        y.par_chunks_mut(b).enumerate().for_each(|(row, yr)| {
            yr.fill(0.0);
            for slot in self.indptr[row]..self.indptr[row + 1] {
                let col = self.indices[slot];
                let xb = &x[col * b..(col + 1) * b];
                let blk = self.block_ref(slot);
                for (i, yi) in yr.iter_mut().enumerate() {
                    let r = &blk[i * b..(i + 1) * b];
                    *yi += r.iter().zip(xb).map(|(a, v)| a * v).sum::<f64>();
                }
            }
        });
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim()];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let b = self.block;
        let mut d = DMatrix::zeros(self.dim(), self.dim());
        for row in 0..self.n {
            for slot in self.indptr[row]..self.indptr[row + 1] {
                let col = self.indices[slot];
                let blk = self.block_ref(slot);
                for i in 0..b {
                    for j in 0..b {
                        d[(row * b + i, col * b + j)] = blk[i * b + j];
                    }
                }
            }
        }
        d
    }
}

/// Inverse diagonal blocks used as a right preconditioner.
pub struct BlockJacobi {
    block: usize,
    inverses: Vec<DMatrix<f64>>,
}

impl BlockJacobi {
    pub fn new(a: &BlockSparse) -> Result<Self> {
        let b = a.block;
        let inverses = (0..a.n)
            .into_par_iter()
            .map(|row| {
                let blk = DMatrix::from_row_slice(b, b, a.block_ref(a.slot(row, row)));
                blk.try_inverse().ok_or(Error::SingularPivot(row * b))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { block: b, inverses })
    }

    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        let b = self.block;
        y.par_chunks_mut(b)
            .zip(x.par_chunks(b))
            .zip(self.inverses.par_iter())
            .for_each(|((yb, xb), inv)| {
                for i in 0..b {
                    yb[i] = (0..b).map(|j| inv[(i, j)] * xb[j]).sum();
                }
            });
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KrylovOptions {
    pub rtol: f64,
    pub max_iterations: usize,
    pub restart: usize,
}

impl Default for KrylovOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            max_iterations: 2000,
            restart: 60,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KrylovStats {
    pub iterations: usize,
    pub relative_residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Right-preconditioned restarted GMRES for `A x = b`; `x` holds the initial guess.
///
/// Convergence is declared on the true residual `‖b − A x‖ ≤ rtol ‖b‖`.
pub fn gmres(
    a: &BlockSparse,
    prec: &BlockJacobi,
    rhs: &[f64],
    x: &mut [f64],
    opts: &KrylovOptions,
) -> Result<KrylovStats> {
    let n = rhs.len();
    let bnorm = norm(rhs);
    if bnorm == 0.0 {
        x.fill(0.0);
        return Ok(KrylovStats {
            iterations: 0,
            relative_residual: 0.0,
        });
    }
    let m = opts.restart.max(1);
    let mut r = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
    let mut h = vec![vec![0.0; m]; m + 1];
    let (mut cs, mut sn) = (vec![0.0; m], vec![0.0; m]);
    let mut g = vec![0.0; m + 1];
    let mut total = 0;

    loop {
        a.matvec_into(x, &mut r);
        for (ri, bi) in r.iter_mut().zip(rhs) {
            *ri = bi - *ri;
        }
        let beta = norm(&r);
        let rel = beta / bnorm;
        if rel <= opts.rtol {
            return Ok(KrylovStats {
                iterations: total,
                relative_residual: rel,
            });
        }
        if total >= opts.max_iterations {
            return Err(Error::NotConverged {
                iterations: total,
                residual: rel,
            });
        }
        basis.clear();
        basis.push(r.iter().map(|v| v / beta).collect());
        g.fill(0.0);
        g[0] = beta;
        let mut k = 0;
        while k < m && total < opts.max_iterations {
            prec.apply(&basis[k], &mut z);
            a.matvec_into(&z, &mut w);
            // modified Gram-Schmidt
            for (j, v) in basis.iter().enumerate() {
                let hj = dot(&w, v);
                h[j][k] = hj;
                for (wi, vi) in w.iter_mut().zip(v) {
                    *wi -= hj * vi;
                }
            }
            let hn = norm(&w);
            h[k + 1][k] = hn;
            for j in 0..k {
                let t = cs[j] * h[j][k] + sn[j] * h[j + 1][k];
                h[j + 1][k] = -sn[j] * h[j][k] + cs[j] * h[j + 1][k];
                h[j][k] = t;
            }
            let denom = (h[k][k] * h[k][k] + h[k + 1][k] * h[k + 1][k]).sqrt();
            if denom == 0.0 {
                cs[k] = 1.0;
                sn[k] = 0.0;
            } else {
                cs[k] = h[k][k] / denom;
                sn[k] = h[k + 1][k] / denom;
            }
            h[k][k] = cs[k] * h[k][k] + sn[k] * h[k + 1][k];
            h[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            total += 1;
            k += 1;
            let estimate = g[k].abs() / bnorm;
            if estimate <= 0.5 * opts.rtol || hn == 0.0 {
                break;
            }
            basis.push(w.iter().map(|v| v / hn).collect());
        }
        // back substitution for the least-squares coefficients
        let mut y = vec![0.0; k];
        for i in (0..k).rev() {
            let s: f64 = (i + 1..k).map(|j| h[i][j] * y[j]).sum();
            y[i] = (g[i] - s) / h[i][i];
        }
        w.fill(0.0);
        for (yi, v) in y.iter().zip(&basis) {
            for (wi, vi) in w.iter_mut().zip(v) {
                *wi += yi * vi;
            }
        }
        prec.apply(&w, &mut z);
        for (xi, zi) in x.iter_mut().zip(&z) {
            *xi += zi;
        }
    }
}

/// LU factorization without pivoting of a banded matrix.
///
/// The step matrices have a positive definite symmetric part, so every
/// leading principal minor is nonsingular and pivoting is not required.
#[derive(Debug, Clone)]
pub struct BandedLu {
    n: usize,
    lower: usize,
    upper: usize,
    // row-major band storage, row i holds columns i-lower ..= i+upper
    band: Vec<f64>,
}

impl BandedLu {
    pub fn factor(a: &CsrMatrix) -> Result<Self> {
        let n = a.nrows;
        let (mut lower, mut upper) = (0, 0);
        for r in 0..n {
            for (c, _) in a.row(r) {
                if c < r {
                    lower = lower.max(r - c);
                } else {
                    upper = upper.max(c - r);
                }
            }
        }
        let width = lower + upper + 1;
        let mut band = vec![0.0; n * width];
        for r in 0..n {
            for (c, v) in a.row(r) {
                band[r * width + (c + lower - r)] += v;
            }
        }
        let mut lu = Self {
            n,
            lower,
            upper,
            band,
        };
        lu.eliminate()?;
        Ok(lu)
    }

    fn idx(&self, r: usize, c: usize) -> usize {
        r * (self.lower + self.upper + 1) + (c + self.lower - r)
    }

    fn eliminate(&mut self) -> Result<()> {
        let n = self.n;
        for k in 0..n {
            let pivot = self.band[self.idx(k, k)];
            if pivot.abs() < 1e-300 {
                return Err(Error::SingularPivot(k));
            }
            let cmax = (k + self.upper).min(n - 1);
            let rmax = (k + self.lower).min(n - 1);
            for r in (k + 1)..=rmax {
                let ir = self.idx(r, k);
                let l = self.band[ir] / pivot;
                if l == 0.0 {
                    continue;
                }
                self.band[ir] = l;
                for c in (k + 1)..=cmax {
                    let v = self.band[self.idx(k, c)];
                    let i = self.idx(r, c);
                    self.band[i] -= l * v;
                }
            }
        }
        Ok(())
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x = rhs.to_vec();
        for r in 0..n {
            let c0 = r.saturating_sub(self.lower);
            let s: f64 = (c0..r).map(|c| self.band[self.idx(r, c)] * x[c]).sum();
            x[r] -= s;
        }
        for r in (0..n).rev() {
            let c1 = (r + self.upper).min(n - 1);
            let s: f64 = ((r + 1)..=c1).map(|c| self.band[self.idx(r, c)] * x[c]).sum();
            x[r] = (x[r] - s) / self.band[self.idx(r, r)];
        }
        x
    }

    pub fn bandwidth(&self) -> (usize, usize) {
        (self.lower, self.upper)
    }
}

/// Dense LU solve, used for small verification problems.
pub fn dense_solve(a: &DMatrix<f64>, b: &[f64]) -> Result<Vec<f64>> {
    a.clone()
        .lu()
        .solve(&DVector::from_column_slice(b))
        .map(|x| x.as_slice().to_vec())
        .ok_or(Error::SingularPivot(0))
}

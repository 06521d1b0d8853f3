use nalgebra::{DMatrix, DVector, Dyn, LU};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::assembly::StepSystem;
use super::field::PhaseSpaceField;
use crate::error::{Error, Result};
use crate::linalg::{gmres, BandedLu, BlockJacobi, BlockSparse, KrylovOptions, KrylovStats};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverKind {
    /// Eliminate the cell-local odd unknowns and solve the even Schur
    /// complement with block-Jacobi preconditioned GMRES.
    #[default]
    Schur,
    /// Banded LU of the full monolithic matrix.
    Banded,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub kind: SolverKind,
    pub krylov: KrylovOptions,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            kind: SolverKind::Schur,
            krylov: KrylovOptions::default(),
        }
    }
}

/// Result of one linear solve.
#[derive(Debug, Clone, PartialEq)]
pub struct StepSolution {
    pub field: PhaseSpaceField,
    pub stats: KrylovStats,
}

/// Factorized step operator, reusable for several right-hand sides.
pub enum StepFactorization {
    Schur(SchurFactorization),
    Banded { lu: BandedLu, perm: Vec<usize> },
}

impl StepFactorization {
    pub fn new(sys: &StepSystem, kind: SolverKind) -> Result<Self> {
        match kind {
            SolverKind::Schur => SchurFactorization::new(sys).map(Self::Schur),
            SolverKind::Banded => {
                let perm = sys.banded_ordering();
                let lu = BandedLu::factor(&sys.banded_matrix(&perm))?;
                Ok(Self::Banded { lu, perm })
            }
        }
    }

    pub fn solve(
        &self,
        sys: &StepSystem,
        rhs: &PhaseSpaceField,
        guess: Option<&PhaseSpaceField>,
        opts: &KrylovOptions,
    ) -> Result<StepSolution> {
        match self {
            Self::Schur(s) => s.solve(sys, rhs, guess, opts),
            Self::Banded { lu, perm } => {
                let flat = rhs.to_vec();
                let mut permuted = vec![0.0; flat.len()];
                for (i, &p) in perm.iter().enumerate() {
                    permuted[p] = flat[i];
                }
                let x = lu.solve(&permuted);
                let back: Vec<f64> = perm.iter().map(|&p| x[p]).collect();
                Ok(StepSolution {
                    field: rhs.from_vec(&back),
                    stats: KrylovStats {
                        iterations: 0,
                        relative_residual: 0.0,
                    },
                })
            }
        }
    }
}

/// Even-parity Schur complement `K_ee + K_oeᵀ K_oo⁻¹ K_oe` with the
/// factorized odd cell blocks needed to reduce right-hand sides and recover
/// the odd unknowns.
pub struct SchurFactorization {
    pub matrix: BlockSparse,
    preconditioner: BlockJacobi,
    odd_lu: Vec<LU<f64, Dyn, Dyn>>,
}

impl SchurFactorization {
    pub fn new(sys: &StepSystem) -> Result<Self> {
        let ne = sys.n_even();
        let [ax, ay, _] = &sys.ops.streaming;
        let odd_lu: Vec<LU<f64, Dyn, Dyn>> = (0..sys.mesh.n_cells())
            .into_par_iter()
            .map(|c| sys.odd_block(c).lu())
            .collect();
        if let Some(c) = odd_lu.iter().position(|lu| !lu.is_invertible()) {
            return Err(Error::SingularPivot(c));
        }
        let mut matrix = BlockSparse::with_pattern(ne, &StepSystem::even_pattern(sys.mesh));
        sys.accumulate_cells(&mut matrix, |c| {
            let lu = &odd_lu[c];
            let px = lu.solve(ax).expect("invertible");
            let py = lu.solve(ay).expect("invertible");
            let m = [
                [ax.tr_mul(&px), ax.tr_mul(&py)],
                [ay.tr_mul(&px), ay.tr_mul(&py)],
            ];
            let q = sys.even_angular(c);
            let me = crate::fem::p1_element_mass(sys.mesh.areas[c]);
            let w = sys.coupling_weights(c);
            let mut out = Vec::with_capacity(9);
            for a in 0..3 {
                for b in 0..3 {
                    let mut blk: DMatrix<f64> = &q * me[a][b];
                    for i in 0..2 {
                        for j in 0..2 {
                            blk += &m[i][j] * (w[a][i] * w[b][j]);
                        }
                    }
                    out.push(blk);
                }
            }
            out
        });
        sys.add_boundary(&mut matrix);
        let preconditioner = BlockJacobi::new(&matrix)?;
        Ok(Self {
            matrix,
            preconditioner,
            odd_lu,
        })
    }

    pub fn solve(
        &self,
        sys: &StepSystem,
        rhs: &PhaseSpaceField,
        guess: Option<&PhaseSpaceField>,
        opts: &KrylovOptions,
    ) -> Result<StepSolution> {
        let (ne, no) = (sys.n_even(), sys.n_odd());
        let [ax, ay, _] = &sys.ops.streaming;
        let mesh = sys.mesh;
        // K_oo⁻¹ f⁻ per cell
        let z: Vec<DVector<f64>> = (0..mesh.n_cells())
            .into_par_iter()
            .map(|c| {
                let f = DVector::from_column_slice(rhs.odd_at(c));
                self.odd_lu[c].solve(&f).expect("invertible")
            })
            .collect();
        let mut reduced = rhs.even.clone();
        for (c, zc) in z.iter().enumerate() {
            let t = mesh.triangles[c];
            let w = sys.coupling_weights(c);
            let tx = ax.tr_mul(zc);
            let ty = ay.tr_mul(zc);
            for a in 0..3 {
                let dst = &mut reduced[t[a] * ne..(t[a] + 1) * ne];
                for k in 0..ne {
                    dst[k] += w[a][0] * tx[k] + w[a][1] * ty[k];
                }
            }
        }
        let mut even = match guess {
            Some(g) => g.even.clone(),
            None => vec![0.0; reduced.len()],
        };
        let stats = gmres(&self.matrix, &self.preconditioner, &reduced, &mut even, opts)?;
        // u⁻ = K_oo⁻¹ (f⁻ - Σ_a B_a u⁺_a)
        let odd: Vec<f64> = (0..mesh.n_cells())
            .into_par_iter()
            .flat_map_iter(|c| {
                let t = mesh.triangles[c];
                let w = sys.coupling_weights(c);
                let mut gx = DVector::zeros(ne);
                let mut gy = DVector::zeros(ne);
                for a in 0..3 {
                    let ua = DVector::from_column_slice(&even[t[a] * ne..(t[a] + 1) * ne]);
                    gx += &ua * w[a][0];
                    gy += &ua * w[a][1];
                }
                let f = DVector::from_column_slice(rhs.odd_at(c)) - ax * gx - ay * gy;
                let u = self.odd_lu[c].solve(&f).expect("invertible");
                debug_assert_eq!(u.len(), no);
                u.as_slice().to_vec()
            })
            .collect();
        Ok(StepSolution {
            field: PhaseSpaceField::from_parts(ne, no, even, odd)?,
            stats,
        })
    }
}

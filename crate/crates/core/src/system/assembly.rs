use std::collections::BTreeSet;

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::field::PhaseSpaceField;
use crate::error::{Error, Result};
use crate::fem::{p1_element_mass, CsrMatrix};
use crate::harmonics::AngularOperators;
use crate::linalg::BlockSparse;
use crate::mesh::Mesh2D;
use crate::model::CellCoefficients;

const CHUNK: usize = 1024;

/// Bilinear form of one backward energy step with frozen coefficients.
///
/// Test functions index rows. Even unknowns are numbered before odd ones in
/// the flat (`to_vec`) layout.
pub struct StepSystem<'a> {
    pub mesh: &'a Mesh2D,
    pub ops: &'a AngularOperators,
    pub coeffs: &'a CellCoefficients,
    pub step: f64,
}

impl<'a> StepSystem<'a> {
    pub fn new(
        mesh: &'a Mesh2D,
        ops: &'a AngularOperators,
        coeffs: &'a CellCoefficients,
        step: f64,
    ) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::InvalidGrid(format!("energy step {step}")));
        }
        for (context, len) in [
            ("stopping power", coeffs.stopping.len()),
            ("transport coefficient", coeffs.transport.len()),
            ("field x", coeffs.field[0].len()),
            ("field y", coeffs.field[1].len()),
            ("field z", coeffs.field[2].len()),
        ] {
            if len != mesh.n_cells() {
                return Err(Error::SizeMismatch {
                    context,
                    expected: mesh.n_cells(),
                    found: len,
                });
            }
        }
        Ok(Self {
            mesh,
            ops,
            coeffs,
            step,
        })
    }

    pub fn n_even(&self) -> usize {
        self.ops.basis.n_even()
    }

    pub fn n_odd(&self) -> usize {
        self.ops.basis.n_odd()
    }

    pub fn dim(&self) -> usize {
        self.mesh.n_nodes() * self.n_even() + self.mesh.n_cells() * self.n_odd()
    }

    pub fn zero_field(&self) -> PhaseSpaceField {
        PhaseSpaceField::zeros(self.mesh.n_nodes(), self.mesh.n_cells(), self.n_even(), self.n_odd())
    }

    /// Angular matrix multiplying the P1 mass on `cell`:
    /// `S/Δε I + T LB + Σ G_i R_i` over the even indices.
    pub fn even_angular(&self, cell: usize) -> DMatrix<f64> {
        let c = self.coeffs;
        local_angular(
            c.stopping[cell] / self.step,
            c.transport[cell],
            [c.field[0][cell], c.field[1][cell], c.field[2][cell]],
            &self.ops.lb_even,
            &self.ops.lorentz_even,
        )
    }

    /// Cell-local odd block `|K| (S/Δε I + T LB + Σ G_i R_i)`.
    pub fn odd_block(&self, cell: usize) -> DMatrix<f64> {
        let c = self.coeffs;
        local_angular(
            c.stopping[cell] / self.step,
            c.transport[cell],
            [c.field[0][cell], c.field[1][cell], c.field[2][cell]],
            &self.ops.lb_odd,
            &self.ops.lorentz_odd,
        ) * self.mesh.areas[cell]
    }

    /// `|K| ∂_x φ_a` and `|K| ∂_y φ_a` for the three vertices of `cell`.
    pub fn coupling_weights(&self, cell: usize) -> [[f64; 2]; 3] {
        let g = self.mesh.gradients(cell);
        let a = self.mesh.areas[cell];
        g.map(|v| [a * v[0], a * v[1]])
    }

    /// Streaming coupling `B_a = Σ_i (∫_K ∂_i φ_a) A_i` (odd test, even trial).
    pub fn coupling(&self, cell: usize) -> [DMatrix<f64>; 3] {
        let w = self.coupling_weights(cell);
        let [ax, ay, _] = &self.ops.streaming;
        w.map(|c| ax * c[0] + ay * c[1])
    }

    /// Block pattern of the even-even matrix: nodes sharing a cell.
    pub fn even_pattern(mesh: &Mesh2D) -> Vec<Vec<usize>> {
        let mut sets = vec![BTreeSet::new(); mesh.n_nodes()];
        for t in &mesh.triangles {
            for &a in t {
                sets[a].extend(t.iter().copied());
            }
        }
        sets.into_iter().map(|s| s.into_iter().collect()).collect()
    }

    /// Even-even block `K_ee`.
    pub fn assemble_even(&self) -> BlockSparse {
        let mut k = BlockSparse::with_pattern(self.n_even(), &Self::even_pattern(self.mesh));
        self.accumulate_cells(&mut k, |c| {
            let q = self.even_angular(c);
            let me = p1_element_mass(self.mesh.areas[c]);
            let mut out = Vec::with_capacity(9);
            for row in me {
                for v in row {
                    out.push(&q * v);
                }
            }
            out
        });
        self.add_boundary(&mut k);
        k
    }

    /// Adds per-cell 3×3 node-block contributions, computed in parallel and
    /// summed in cell order.
    pub(crate) fn accumulate_cells<F>(&self, k: &mut BlockSparse, local: F)
    where
        F: Fn(usize) -> Vec<DMatrix<f64>> + Sync,
    {
        let b = k.block;
        let n = self.mesh.n_cells();
        for start in (0..n).step_by(CHUNK) {
            let end = (start + CHUNK).min(n);
            let blocks: Vec<Vec<DMatrix<f64>>> = (start..end).into_par_iter().map(&local).collect();
            for (c, cell_blocks) in (start..end).zip(blocks) {
                let t = self.mesh.triangles[c];
                for a in 0..3 {
                    for bb in 0..3 {
                        let m = &cell_blocks[3 * a + bb];
                        let slot = k.slot(t[a], t[bb]);
                        let dst = k.block_mut(slot);
                        for i in 0..b {
                            for j in 0..b {
                                dst[i * b + j] += m[(i, j)];
                            }
                        }
                    }
                }
            }
        }
    }

    pub(crate) fn add_boundary(&self, k: &mut BlockSparse) {
        let b = k.block;
        for e in &self.mesh.boundary_edges {
            let w = &self.ops.boundary[e.normal.axis()];
            let (d, o) = (e.length / 3.0, e.length / 6.0);
            let [p, q] = e.nodes;
            for (r, c, f) in [(p, p, d), (q, q, d), (p, q, o), (q, p, o)] {
                let slot = k.slot(r, c);
                let dst = k.block_mut(slot);
                for i in 0..b {
                    for j in 0..b {
                        dst[i * b + j] += f * w[(i, j)];
                    }
                }
            }
        }
    }

    /// Full operator applied to `u`, without assembling the monolithic matrix.
    pub fn apply(&self, u: &PhaseSpaceField) -> PhaseSpaceField {
        let (ne, no) = (self.n_even(), self.n_odd());
        let mut r = self.zero_field();
        r.even = self.assemble_even().matvec(&u.even);
        let [ax, ay, _] = &self.ops.streaming;
        for c in 0..self.mesh.n_cells() {
            let t = self.mesh.triangles[c];
            let w = self.coupling_weights(c);
            let uo = nalgebra::DVector::from_column_slice(u.odd_at(c));
            // odd rows: Σ_a B_a u⁺_a + K_oo u⁻
            let mut ro = self.odd_block(c) * &uo;
            let mut gx = nalgebra::DVector::zeros(ne);
            let mut gy = nalgebra::DVector::zeros(ne);
            for a in 0..3 {
                let ua = nalgebra::DVector::from_column_slice(u.even_at(t[a]));
                gx += &ua * w[a][0];
                gy += &ua * w[a][1];
            }
            ro += ax * gx + ay * gy;
            r.odd[c * no..(c + 1) * no].copy_from_slice(ro.as_slice());
            // even rows: -B_aᵀ u⁻
            let tx = ax.tr_mul(&uo);
            let ty = ay.tr_mul(&uo);
            for a in 0..3 {
                let dst = &mut r.even[t[a] * ne..(t[a] + 1) * ne];
                for k in 0..ne {
                    dst[k] -= w[a][0] * tx[k] + w[a][1] * ty[k];
                }
            }
        }
        r
    }

    /// Nonzeros of the monolithic matrix in the flat layout.
    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        let (ne, no) = (self.n_even(), self.n_odd());
        let off = self.mesh.n_nodes() * ne;
        let kee = self.assemble_even();
        let mut trip = Vec::new();
        for row in 0..kee.n {
            for slot in kee.indptr[row]..kee.indptr[row + 1] {
                let col = kee.indices[slot];
                let blk = kee.block_ref(slot);
                for i in 0..ne {
                    for j in 0..ne {
                        let v = blk[i * ne + j];
                        if v != 0.0 {
                            trip.push((row * ne + i, col * ne + j, v));
                        }
                    }
                }
            }
        }
        for c in 0..self.mesh.n_cells() {
            let t = self.mesh.triangles[c];
            let b = self.coupling(c);
            for a in 0..3 {
                for i in 0..no {
                    for k in 0..ne {
                        let v = b[a][(i, k)];
                        if v != 0.0 {
                            trip.push((off + c * no + i, t[a] * ne + k, v));
                            trip.push((t[a] * ne + k, off + c * no + i, -v));
                        }
                    }
                }
            }
            let koo = self.odd_block(c);
            for i in 0..no {
                for j in 0..no {
                    if koo[(i, j)] != 0.0 {
                        trip.push((off + c * no + i, off + c * no + j, koo[(i, j)]));
                    }
                }
            }
        }
        trip
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut d = DMatrix::zeros(n, n);
        for (r, c, v) in self.triplets() {
            d[(r, c)] += v;
        }
        d
    }

    /// Permutation (flat index → banded index) grouping unknowns of nodes and
    /// cells in order of their position, row by row.
    pub fn banded_ordering(&self) -> Vec<usize> {
        let (ne, no) = (self.n_even(), self.n_odd());
        let mesh = self.mesh;
        // (y, x, entity) with entity < n_nodes for nodes
        let mut entities: Vec<(f64, f64, usize)> = mesh
            .vertices
            .iter()
            .enumerate()
            .map(|(i, p)| (p[1], p[0], i))
            .chain((0..mesh.n_cells()).map(|c| {
                let p = mesh.centroid(c);
                (p[1], p[0], mesh.n_nodes() + c)
            }))
            .collect();
        entities.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)).then(a.2.cmp(&b.2)));
        let off = mesh.n_nodes() * ne;
        let mut perm = vec![0; self.dim()];
        let mut next = 0;
        for (_, _, e) in entities {
            let (start, len) = if e < mesh.n_nodes() {
                (e * ne, ne)
            } else {
                (off + (e - mesh.n_nodes()) * no, no)
            };
            for k in 0..len {
                perm[start + k] = next;
                next += 1;
            }
        }
        perm
    }

    /// Monolithic matrix in the banded ordering.
    pub fn banded_matrix(&self, perm: &[usize]) -> CsrMatrix {
        let trip = self
            .triplets()
            .into_iter()
            .map(|(r, c, v)| (perm[r], perm[c], v))
            .collect();
        CsrMatrix::from_triplets(self.dim(), self.dim(), trip)
    }
}

fn local_angular(
    mass: f64,
    transport: f64,
    field: [f64; 3],
    lb: &[f64],
    lorentz: &[DMatrix<f64>; 3],
) -> DMatrix<f64> {
    let n = lb.len();
    let mut q = DMatrix::zeros(n, n);
    for i in 0..3 {
        if field[i] != 0.0 {
            q += &lorentz[i] * field[i];
        }
    }
    for k in 0..n {
        q[(k, k)] += mass + transport * lb[k];
    }
    q
}

//! P1 (continuous, nodal) and P0 (cellwise constant) finite-element matrices.
//!
//! All integrands are polynomials times cellwise constants, so every matrix is
//! integrated in closed form.

use crate::error::{Error, Result};
use crate::harmonics::gauss_legendre_interval;
use crate::mesh::{BoundaryNormal, Mesh2D};

/// Compressed sparse row matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    pub nrows: usize,
    pub ncols: usize,
    pub indptr: Vec<usize>,
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from `(row, col, value)` triplets, summing duplicates.
    pub fn from_triplets(nrows: usize, ncols: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_by_key(|&(r, c, _)| (r, c));
        let mut indptr = vec![0; nrows + 1];
        let mut indices = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last = None;
        for (r, c, v) in triplets {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                indices.push(c);
                values.push(v);
                indptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..nrows {
            indptr[r + 1] += indptr[r];
        }
        Self {
            nrows,
            ncols,
            indptr,
            indices,
            values,
        }
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.indptr[r]..self.indptr[r + 1];
        self.indices[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.nrows)
            .map(|r| self.row(r).map(|(c, v)| v * x[c]).sum())
            .collect()
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.row(r).find(|&(cc, _)| cc == c).map_or(0.0, |(_, v)| v)
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut d = nalgebra::DMatrix::zeros(self.nrows, self.ncols);
        for r in 0..self.nrows {
            for (c, v) in self.row(r) {
                d[(r, c)] += v;
            }
        }
        d
    }
}

/// Element mass matrix of the P1 hats on a triangle of the given area.
pub fn p1_element_mass(area: f64) -> [[f64; 3]; 3] {
    let d = area / 6.0;
    let o = area / 12.0;
    [[d, o, o], [o, d, o], [o, o, d]]
}

fn check_len(context: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::SizeMismatch {
            context,
            expected,
            found,
        });
    }
    Ok(())
}

/// `∫ w φ_i φ_j` with `w` constant on each cell.
pub fn assemble_weighted_p1_mass(mesh: &Mesh2D, weight: &[f64]) -> Result<CsrMatrix> {
    check_len("cell weights", mesh.n_cells(), weight.len())?;
    let mut trip = Vec::with_capacity(9 * mesh.n_cells());
    for (c, tri) in mesh.triangles.iter().enumerate() {
        let me = p1_element_mass(mesh.areas[c] * weight[c]);
        for a in 0..3 {
            for b in 0..3 {
                trip.push((tri[a], tri[b], me[a][b]));
            }
        }
    }
    Ok(CsrMatrix::from_triplets(mesh.n_nodes(), mesh.n_nodes(), trip))
}

/// Diagonal of the weighted P0 mass matrix, `w_c |K_c|`.
pub fn assemble_p0_mass(mesh: &Mesh2D, weight: &[f64]) -> Result<Vec<f64>> {
    check_len("cell weights", mesh.n_cells(), weight.len())?;
    Ok(mesh.areas.iter().zip(weight).map(|(a, w)| a * w).collect())
}

/// `(C_i)_{cell, node} = ∫_cell ∂_i φ_node`, for `i = x, y`.
pub fn assemble_derivative_coupling(mesh: &Mesh2D) -> (CsrMatrix, CsrMatrix) {
    let mut tx = Vec::with_capacity(3 * mesh.n_cells());
    let mut ty = Vec::with_capacity(3 * mesh.n_cells());
    for (c, tri) in mesh.triangles.iter().enumerate() {
        let g = mesh.gradients(c);
        for a in 0..3 {
            tx.push((c, tri[a], g[a][0] * mesh.areas[c]));
            ty.push((c, tri[a], g[a][1] * mesh.areas[c]));
        }
    }
    (
        CsrMatrix::from_triplets(mesh.n_cells(), mesh.n_nodes(), tx),
        CsrMatrix::from_triplets(mesh.n_cells(), mesh.n_nodes(), ty),
    )
}

/// 1D P1 mass matrix accumulated over the boundary edges with outward normal `normal`.
pub fn assemble_boundary_mass(mesh: &Mesh2D, normal: BoundaryNormal) -> CsrMatrix {
    let mut trip = Vec::new();
    for e in mesh.boundary_edges.iter().filter(|e| e.normal == normal) {
        let (d, o) = (e.length / 3.0, e.length / 6.0);
        let [a, b] = e.nodes;
        trip.extend([(a, a, d), (b, b, d), (a, b, o), (b, a, o)]);
    }
    CsrMatrix::from_triplets(mesh.n_nodes(), mesh.n_nodes(), trip)
}

/// Quadrature on a triangle in barycentric coordinates; weights sum to one
/// and are scaled by the cell area at use.
#[derive(Debug, Clone)]
pub struct TriangleRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

impl TriangleRule {
    /// Collapsed (Duffy) Gauss product rule exact for polynomials of total
    /// degree `<= degree`.
    pub fn collapsed(degree: usize) -> Self {
        let n = degree / 2 + 1;
        let (u, wu) = gauss_legendre_interval(n + 1, 0.0, 1.0);
        let (v, wv) = gauss_legendre_interval(n, 0.0, 1.0);
        let mut points = Vec::with_capacity(u.len() * v.len());
        let mut weights = Vec::with_capacity(u.len() * v.len());
        for (&ui, &wi) in u.iter().zip(&wu) {
            for (&vj, &wj) in v.iter().zip(&wv) {
                let l1 = ui;
                let l2 = vj * (1.0 - ui);
                points.push([1.0 - l1 - l2, l1, l2]);
                // reference area is 1/2, so normalized weight is 2 * jacobian * w
                weights.push(2.0 * wi * wj * (1.0 - ui));
            }
        }
        Self { points, weights }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::Rect;

    fn reference_mesh() -> Mesh2D {
        // single triangle (0,0), (1,0), (0,1): lower half of the unit square
        let mut m = Mesh2D::rectangle(1, 1, Rect::new(0.0, 1.0, 0.0, 1.0)).unwrap();
        m.vertices = vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        m.triangles = vec![[0, 1, 2]];
        m.areas = vec![0.5];
        m.boundary_edges.clear();
        m
    }

    #[test]
    fn reference_triangle_mass_and_coupling() {
        let m = reference_mesh();
        let mass = assemble_weighted_p1_mass(&m, &[1.0]).unwrap().to_dense();
        let area = 0.5;
        for a in 0..3 {
            for b in 0..3 {
                let e = area / 12.0 * if a == b { 2.0 } else { 1.0 };
                assert!((mass[(a, b)] - e).abs() < 1e-15);
            }
        }
        // second-order check of the closed form: ∫ λ_a λ_b via quadrature
        let rule = TriangleRule::collapsed(2);
        for a in 0..3 {
            for b in 0..3 {
                let q: f64 = rule
                    .points
                    .iter()
                    .zip(&rule.weights)
                    .map(|(p, w)| w * area * p[a] * p[b])
                    .sum();
                assert!((q - mass[(a, b)]).abs() < 1e-15);
            }
        }
        let (cx, _) = assemble_derivative_coupling(&m);
        let row: Vec<f64> = (0..3).map(|n| cx.get(0, n)).collect();
        assert!((row[0] + 0.5).abs() < 1e-15 && (row[1] - 0.5).abs() < 1e-15 && row[2].abs() < 1e-15);
    }

    #[test]
    fn weighted_mass_is_linear_in_weight() {
        let m = Mesh2D::rectangle(3, 2, Rect::default()).unwrap();
        let one = assemble_weighted_p1_mass(&m, &vec![1.0; m.n_cells()]).unwrap();
        let three = assemble_weighted_p1_mass(&m, &vec![3.0; m.n_cells()]).unwrap();
        let zero = assemble_weighted_p1_mass(&m, &vec![0.0; m.n_cells()]).unwrap();
        assert!(zero.values.iter().all(|&v| v == 0.0));
        for (a, b) in one.values.iter().zip(&three.values) {
            assert!((3.0 * a - b).abs() < 1e-15);
        }
        let total: f64 = one.values.iter().sum();
        assert!((total - 4.0).abs() < 1e-12);
        assert!(assemble_weighted_p1_mass(&m, &[1.0]).is_err());
    }

    #[test]
    fn p0_mass_trace_and_symmetry() {
        let m = Mesh2D::rectangle(8, 8, Rect::default()).unwrap();
        let d = assemble_p0_mass(&m, &vec![1.0; m.n_cells()]).unwrap();
        assert_eq!(d, m.areas);
        assert!((d.iter().sum::<f64>() - 4.0).abs() < 1e-12);
        let cx: Vec<f64> = (0..m.n_cells()).map(|c| m.centroid(c)[0]).collect();
        let d = assemble_p0_mass(&m, &cx).unwrap();
        assert!(d.iter().sum::<f64>().abs() < 1e-14);
    }

    #[test]
    fn coupling_reproduces_linear_gradients() {
        let m = Mesh2D::rectangle(5, 4, Rect::new(-1.0, 2.0, 0.0, 1.5)).unwrap();
        let (cx, cy) = assemble_derivative_coupling(&m);
        let ones = vec![1.0; m.n_nodes()];
        assert!(cx.matvec(&ones).iter().chain(&cy.matvec(&ones)).all(|v| v.abs() < 1e-13));
        let lin: Vec<f64> = m.vertices.iter().map(|p| 2.0 * p[0] - 3.0 * p[1] + 0.5).collect();
        let (gx, gy) = (cx.matvec(&lin), cy.matvec(&lin));
        for c in 0..m.n_cells() {
            assert!((gx[c] / m.areas[c] - 2.0).abs() < 1e-12);
            assert!((gy[c] / m.areas[c] + 3.0).abs() < 1e-12);
        }
        let x: Vec<f64> = m.vertices.iter().map(|p| p[0]).collect();
        let gx = cx.matvec(&x);
        let gy = cy.matvec(&x);
        for c in 0..m.n_cells() {
            assert!((gx[c] - m.areas[c]).abs() < 1e-12 && gy[c].abs() < 1e-12);
        }
    }

    #[test]
    fn boundary_mass_properties() {
        let m = Mesh2D::rectangle(8, 8, Rect::default()).unwrap();
        let mut perimeter = 0.0;
        for n in BoundaryNormal::ALL {
            let b = assemble_boundary_mass(&m, n);
            let rows = b.matvec(&vec![1.0; m.n_nodes()]);
            perimeter += rows.iter().sum::<f64>();
            // interior nodes carry nothing
            for (node, p) in m.vertices.iter().enumerate() {
                if p[0].abs() < 1.0 - 1e-12 && p[1].abs() < 1.0 - 1e-12 {
                    assert_eq!(rows[node], 0.0);
                }
            }
            // trace equals Σ_edges 2·len/3
            let trace: f64 = (0..m.n_nodes()).map(|i| b.get(i, i)).sum();
            let expected: f64 = m
                .boundary_edges
                .iter()
                .filter(|e| e.normal == n)
                .map(|e| 2.0 * e.length / 3.0)
                .sum();
            assert!((trace - expected).abs() < 1e-14);
            assert!((trace - 4.0 / 3.0).abs() < 1e-12);
        }
        assert!((perimeter - 8.0).abs() < 1e-12);
    }

    #[test]
    fn collapsed_rule_is_exact() {
        // ∫_ref x^a y^b = a! b! / (a+b+2)!, reference area 1/2
        let fact = |n: usize| (1..=n).map(|k| k as f64).product::<f64>();
        for degree in 0..=8 {
            let rule = TriangleRule::collapsed(degree);
            assert!((rule.weights.iter().sum::<f64>() - 1.0).abs() < 1e-14);
            for a in 0..=degree {
                for b in 0..=(degree - a) {
                    let q: f64 = rule
                        .points
                        .iter()
                        .zip(&rule.weights)
                        .map(|(p, w)| 0.5 * w * p[1].powi(a as i32) * p[2].powi(b as i32))
                        .sum();
                    let exact = fact(a) * fact(b) / fact(a + b + 2);
                    assert!((q - exact).abs() < 1e-15, "deg {degree} a {a} b {b}");
                }
            }
        }
    }
}

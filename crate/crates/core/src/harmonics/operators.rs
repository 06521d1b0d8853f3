//! Angular moment matrices of the streaming, Lorentz, Laplace-Beltrami and
//! boundary operators in the parity-split basis.

use std::io::Write;

use nalgebra::DMatrix;

use super::basis::{Harmonic, HarmonicTable, SphericalBasis, Vec3};
use super::quadrature::SphereQuadrature;
use crate::error::{Error, Result};

/// Minimum exactness for the polynomial moment integrals at order `N`.
pub fn operator_exactness(order: usize) -> i64 {
    2 * order as i64 + 2
}

/// Exactness used for the `|s · n|` boundary weights.
pub fn boundary_exactness(order: usize) -> i64 {
    4 * order as i64 + 8
}

/// `(A_i)_{k'k} = ∫ s_i Y_k Y_k'` with `k` even (columns) and `k'` odd (rows).
pub fn streaming_matrices(
    basis: &SphericalBasis,
    quad: &SphereQuadrature,
) -> Result<[DMatrix<f64>; 3]> {
    check_exactness(basis, quad)?;
    let (ne, no) = (basis.n_even(), basis.n_odd());
    let mut a = [
        DMatrix::zeros(no, ne),
        DMatrix::zeros(no, ne),
        DMatrix::zeros(no, ne),
    ];
    let mut table = HarmonicTable::new(basis.order());
    let mut ye = vec![0.0; ne];
    let mut yo = vec![0.0; no];
    for (&s, &w) in quad.nodes.iter().zip(&quad.weights) {
        table.evaluate(s);
        gather(&table, basis.even(), &mut ye);
        gather(&table, basis.odd(), &mut yo);
        for (i, ai) in a.iter_mut().enumerate() {
            let ws = w * s[i];
            for c in 0..ne {
                let f = ws * ye[c];
                for r in 0..no {
                    ai[(r, c)] += f * yo[r];
                }
            }
        }
    }
    Ok(a)
}

/// Lorentz moment matrices `(R_i)_{k'k} = ∫ (s × ∇_s Y_k)_i Y_k'`, returned
/// separately for the even and the odd block (the operator preserves parity).
pub fn lorentz_matrices(
    basis: &SphericalBasis,
    quad: &SphereQuadrature,
) -> Result<([DMatrix<f64>; 3], [DMatrix<f64>; 3])> {
    check_exactness(basis, quad)?;
    let even = lorentz_block(basis.even(), basis.order(), quad);
    let odd = lorentz_block(basis.odd(), basis.order(), quad);
    Ok((even, odd))
}

fn lorentz_block(list: &[Harmonic], order: usize, quad: &SphereQuadrature) -> [DMatrix<f64>; 3] {
    let n = list.len();
    let mut r = [
        DMatrix::zeros(n, n),
        DMatrix::zeros(n, n),
        DMatrix::zeros(n, n),
    ];
    let mut table = HarmonicTable::new(order);
    let mut y = vec![0.0; n];
    let mut rot = vec![[0.0; 3]; n];
    for (&s, &w) in quad.nodes.iter().zip(&quad.weights) {
        table.evaluate_with_gradient(s);
        gather(&table, list, &mut y);
        for (k, h) in list.iter().enumerate() {
            rot[k] = table.rotation(*h, s);
        }
        for (i, ri) in r.iter_mut().enumerate() {
            for c in 0..n {
                let f = w * rot[c][i];
                for row in 0..n {
                    ri[(row, c)] += f * y[row];
                }
            }
        }
    }
    r
}

/// Diagonal `l(l+1)` of `-Δ_s` over the given index list.
pub fn laplace_beltrami_diagonal(list: &[Harmonic]) -> Vec<f64> {
    list.iter().map(Harmonic::eigenvalue).collect()
}

/// `(W_n)_{k'k} = ∫ |s · n| Y_k Y_k'` over the even indices.
pub fn boundary_weight_matrix(
    basis: &SphericalBasis,
    normal: Vec3,
    exactness: i64,
) -> Result<DMatrix<f64>> {
    let quad = SphereQuadrature::hemisphere_split(exactness, normal)?;
    let ne = basis.n_even();
    let mut w = DMatrix::zeros(ne, ne);
    let mut table = HarmonicTable::new(basis.order());
    let mut ye = vec![0.0; ne];
    for (&s, &wq) in quad.nodes.iter().zip(&quad.weights) {
        table.evaluate(s);
        gather(&table, basis.even(), &mut ye);
        let f = wq * (s[0] * normal[0] + s[1] * normal[1] + s[2] * normal[2]).abs();
        for c in 0..ne {
            for r in 0..ne {
                w[(r, c)] += f * ye[r] * ye[c];
            }
        }
    }
    Ok(w)
}

fn gather(table: &HarmonicTable, list: &[Harmonic], out: &mut [f64]) {
    for (o, h) in out.iter_mut().zip(list) {
        *o = table.value(*h);
    }
}

fn check_exactness(basis: &SphericalBasis, quad: &SphereQuadrature) -> Result<()> {
    let need = operator_exactness(basis.order());
    if (quad.exactness as i64) < need {
        return Err(Error::InvalidExactness(quad.exactness as i64));
    }
    Ok(())
}

/// All angular matrices needed to assemble a step system at order `N`.
///
/// Only the in-plane streaming/boundary directions enter the spatially
/// two-dimensional problem, but all three Cartesian components are kept.
#[derive(Debug, Clone)]
pub struct AngularOperators {
    pub basis: SphericalBasis,
    /// `A_x, A_y, A_z`, each `n_odd × n_even`.
    pub streaming: [DMatrix<f64>; 3],
    pub lorentz_even: [DMatrix<f64>; 3],
    pub lorentz_odd: [DMatrix<f64>; 3],
    pub lb_even: Vec<f64>,
    pub lb_odd: Vec<f64>,
    /// `W_{e_x}`, `W_{e_y}`, `W_{e_z}`; `W_{-n} = W_n`.
    pub boundary: [DMatrix<f64>; 3],
}

impl AngularOperators {
    pub fn new(basis: &SphericalBasis) -> Result<Self> {
        let quad = SphereQuadrature::product(operator_exactness(basis.order()))?;
        Self::with_quadrature(basis, &quad, boundary_exactness(basis.order()))
    }

    pub fn with_quadrature(
        basis: &SphericalBasis,
        quad: &SphereQuadrature,
        boundary_exactness: i64,
    ) -> Result<Self> {
        let streaming = streaming_matrices(basis, quad)?;
        let (lorentz_even, lorentz_odd) = lorentz_matrices(basis, quad)?;
        let boundary = [
            boundary_weight_matrix(basis, [1.0, 0.0, 0.0], boundary_exactness)?,
            boundary_weight_matrix(basis, [0.0, 1.0, 0.0], boundary_exactness)?,
            boundary_weight_matrix(basis, [0.0, 0.0, 1.0], boundary_exactness)?,
        ];
        Ok(Self {
            basis: basis.clone(),
            streaming,
            lorentz_even,
            lorentz_odd,
            lb_even: laplace_beltrami_diagonal(basis.even()),
            lb_odd: laplace_beltrami_diagonal(basis.odd()),
            boundary,
        })
    }

    /// Writes every matrix as `name,row,col,value` lines, skipping exact zeros.
    /// Each matrix is preceded by a `# name rows x cols` comment.
    pub fn write_csv(&self, out: &mut impl Write) -> Result<()> {
        writeln!(out, "matrix,row,col,value")?;
        let axes = ["x", "y", "z"];
        let mut dump = |name: String, m: &DMatrix<f64>| -> Result<()> {
            writeln!(out, "# {name} {}x{}", m.nrows(), m.ncols())?;
            for c in 0..m.ncols() {
                for r in 0..m.nrows() {
                    let v = m[(r, c)];
                    if v != 0.0 {
                        writeln!(out, "{name},{r},{c},{v:.17e}")?;
                    }
                }
            }
            Ok(())
        };
        for i in 0..3 {
            dump(format!("A_{}", axes[i]), &self.streaming[i])?;
        }
        for i in 0..3 {
            dump(format!("R_{}_even", axes[i]), &self.lorentz_even[i])?;
            dump(format!("R_{}_odd", axes[i]), &self.lorentz_odd[i])?;
        }
        for i in 0..3 {
            dump(format!("W_{}", axes[i]), &self.boundary[i])?;
        }
        dump(
            "LB_even".into(),
            &DMatrix::from_diagonal(&self.lb_even.clone().into()),
        )?;
        dump(
            "LB_odd".into(),
            &DMatrix::from_diagonal(&self.lb_odd.clone().into()),
        )?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ops(order: i64) -> AngularOperators {
        AngularOperators::new(&SphericalBasis::new(order).unwrap()).unwrap()
    }

    #[test]
    fn streaming_closed_form_entries() {
        let o = ops(3);
        let b = &o.basis;
        let col = b.position(Harmonic::new(0, 0)).unwrap();
        let z_row = b.position(Harmonic::new(1, 0)).unwrap();
        let x_row = b.position(Harmonic::new(1, 1)).unwrap();
        let inv_sqrt3 = 1.0 / 3f64.sqrt();
        assert!((o.streaming[2][(z_row, col)] - inv_sqrt3).abs() < 1e-14);
        assert!((o.streaming[0][(x_row, col)] - inv_sqrt3).abs() < 1e-14);
        assert!(o.streaming[2][(x_row, col)].abs() < 1e-14);
    }

    #[test]
    fn streaming_z_matches_legendre_recurrence() {
        // ∫ z Y_l^m Y_{l+1}^m = sqrt(((l+1)^2 - m^2) / ((2l+1)(2l+3)))
        let o = ops(5);
        let b = &o.basis;
        for (c, he) in b.even().iter().enumerate() {
            for (r, ho) in b.odd().iter().enumerate() {
                let (lo, hi) = if he.l < ho.l { (he, ho) } else { (ho, he) };
                let expected = if he.m == ho.m && hi.l == lo.l + 1 {
                    let (l, m) = (lo.l as f64, lo.m as f64);
                    (((l + 1.0).powi(2) - m * m) / ((2.0 * l + 1.0) * (2.0 * l + 3.0))).sqrt()
                } else {
                    0.0
                };
                assert!((o.streaming[2][(r, c)] - expected).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn lorentz_z_is_phi_derivative() {
        let o = ops(5);
        let b = &o.basis;
        for (c, h) in b.even().iter().enumerate() {
            for (r, g) in b.even().iter().enumerate() {
                let expected = if g.l == h.l && g.m == -h.m && h.m != 0 {
                    // ∂_φ Y_l^m = -m Y_l^{-m} for m > 0, |m| Y_l^{|m|} for m < 0
                    -(h.m as f64)
                } else {
                    0.0
                };
                assert!((o.lorentz_even[2][(r, c)] - expected).abs() < 1e-13, "{g:?} {h:?}");
            }
        }
        let c = b.position(Harmonic::new(3, 0)).unwrap();
        assert!(o.lorentz_odd[2].column(c).iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn boundary_weight_closed_form() {
        let o = ops(3);
        assert!((o.boundary[2][(0, 0)] - 0.5).abs() < 1e-14);
        assert!((o.boundary[0][(0, 0)] - 0.5).abs() < 1e-14);
        for w in &o.boundary {
            assert!((w - w.transpose()).abs().max() < 1e-14);
        }
    }

    #[test]
    fn rejects_low_exactness() {
        let b = SphericalBasis::new(5).unwrap();
        let q = SphereQuadrature::product(6).unwrap();
        assert!(streaming_matrices(&b, &q).is_err());
    }

    #[test]
    fn csv_dump_has_header_and_entries() {
        let mut buf = Vec::new();
        ops(1).write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("matrix,row,col,value\n"));
        assert!(text.lines().any(|l| l.starts_with("A_z,1,0,")));
    }
}

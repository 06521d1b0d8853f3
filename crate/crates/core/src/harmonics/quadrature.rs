use std::f64::consts::PI;

use super::basis::{cross, Vec3};
use crate::error::{Error, Result};

/// Gauss-Legendre nodes and weights on `[-1, 1]`, computed by Newton iteration.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..(n + 1) / 2 {
        let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Gauss-Legendre rule mapped onto `[a, b]`.
pub fn gauss_legendre_interval(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    (
        x.iter().map(|t| mid + half * t).collect(),
        w.iter().map(|v| half * v).collect(),
    )
}

/// Quadrature rule on the unit sphere.
#[derive(Debug, Clone)]
pub struct SphereQuadrature {
    pub nodes: Vec<Vec3>,
    pub weights: Vec<f64>,
    /// Total polynomial degree integrated exactly.
    pub exactness: usize,
}

impl SphereQuadrature {
    /// Gauss-Legendre in `cos θ` times the trapezoidal rule in `φ`.
    ///
    /// Exact for all polynomials in `(x, y, z)` of degree `<= exactness`.
    pub fn product(exactness: i64) -> Result<Self> {
        if exactness < 0 {
            return Err(Error::InvalidExactness(exactness));
        }
        let p = exactness as usize;
        let (mu, wmu) = gauss_legendre(p / 2 + 1);
        Ok(Self::assemble(&mu, &wmu, p + 1, [0.0, 0.0, 1.0], p))
    }

    /// Product rule whose polar axis is `axis`, with the polar Gauss rule split
    /// at the equator.
    ///
    /// Exact for `|s · axis| · p(s)` with `p` a polynomial of degree
    /// `<= exactness`; used for the boundary weight `|s · n|`.
    pub fn hemisphere_split(exactness: i64, axis: Vec3) -> Result<Self> {
        if exactness < 0 {
            return Err(Error::InvalidExactness(exactness));
        }
        let p = exactness as usize;
        let n = p / 2 + 2;
        let (mut mu, mut wmu) = gauss_legendre_interval(n, -1.0, 0.0);
        let (mu_up, w_up) = gauss_legendre_interval(n, 0.0, 1.0);
        mu.extend(mu_up);
        wmu.extend(w_up);
        Ok(Self::assemble(&mu, &wmu, p + 2, axis, p))
    }

    fn assemble(mu: &[f64], wmu: &[f64], n_phi: usize, axis: Vec3, exactness: usize) -> Self {
        let (t1, t2, a) = frame(axis);
        let dphi = 2.0 * PI / n_phi as f64;
        let mut nodes = Vec::with_capacity(mu.len() * n_phi);
        let mut weights = Vec::with_capacity(mu.len() * n_phi);
        for (&z, &wz) in mu.iter().zip(wmu) {
            let r = (1.0 - z * z).max(0.0).sqrt();
            for j in 0..n_phi {
                // offset by half a step so no node sits on the reference meridian
                let phi = (j as f64 + 0.5) * dphi;
                let (sp, cp) = phi.sin_cos();
                let (c1, c2) = (r * cp, r * sp);
                nodes.push([
                    c1 * t1[0] + c2 * t2[0] + z * a[0],
                    c1 * t1[1] + c2 * t2[1] + z * a[1],
                    c1 * t1[2] + c2 * t2[2] + z * a[2],
                ]);
                weights.push(wz * dphi);
            }
        }
        Self {
            nodes,
            weights,
            exactness,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(Vec3) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&s, &w)| w * f(s))
            .sum()
    }
}

/// Right-handed orthonormal frame `(t1, t2, axis)`; the canonical frame for `e_z`.
fn frame(axis: Vec3) -> (Vec3, Vec3, Vec3) {
    let n = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
    let a = [axis[0] / n, axis[1] / n, axis[2] / n];
    if (a[2] - 1.0).abs() < 1e-15 {
        return ([1.0, 0.0, 0.0], [0.0, 1.0, 0.0], a);
    }
    let helper = if a[2].abs() < 0.9 {
        [0.0, 0.0, 1.0]
    } else {
        [1.0, 0.0, 0.0]
    };
    let t1 = cross(helper, a);
    let l = (t1[0] * t1[0] + t1[1] * t1[1] + t1[2] * t1[2]).sqrt();
    let t1 = [t1[0] / l, t1[1] / l, t1[2] / l];
    let t2 = cross(a, t1);
    (t1, t2, a)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_monomials() {
        for n in 1..12 {
            let (x, w) = gauss_legendre(n);
            for k in 0..(2 * n) {
                let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(k as i32)).sum();
                let exact = if k % 2 == 1 { 0.0 } else { 2.0 / (k as f64 + 1.0) };
                assert!((q - exact).abs() < 1e-14, "n={n} k={k}");
            }
        }
    }

    #[test]
    fn sphere_area_and_moments() {
        let q = SphereQuadrature::product(12).unwrap();
        assert!((q.weights.iter().sum::<f64>() - 4.0 * PI).abs() < 1e-12);
        for s in &q.nodes {
            assert!(((s[0] * s[0] + s[1] * s[1] + s[2] * s[2]).sqrt() - 1.0).abs() < 1e-12);
        }
        assert!((q.integrate(|s| s[2] * s[2]) - 4.0 * PI / 3.0).abs() < 1e-10);
        assert!((q.integrate(|s| s[0] * s[0] * s[1] * s[1]) - 4.0 * PI / 15.0).abs() < 1e-12);
        assert!(q.integrate(|s| s[0] * s[1] * s[2]).abs() < 1e-13);
    }

    #[test]
    fn split_rule_integrates_absolute_cosine() {
        for axis in [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [0.6, 0.0, 0.8]] {
            let q = SphereQuadrature::hemisphere_split(8, axis).unwrap();
            let v = q.integrate(|s| (s[0] * axis[0] + s[1] * axis[1] + s[2] * axis[2]).abs());
            assert!((v - 2.0 * PI).abs() < 1e-13);
            // |s_n| s_n^2 integrates to π
            let v = q.integrate(|s| {
                let c = s[0] * axis[0] + s[1] * axis[1] + s[2] * axis[2];
                c.abs() * c * c
            });
            assert!((v - PI).abs() < 1e-13);
        }
    }

    #[test]
    fn negative_exactness_rejected() {
        assert!(SphereQuadrature::product(-1).is_err());
    }
}

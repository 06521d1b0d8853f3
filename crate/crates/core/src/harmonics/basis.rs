//! Real orthonormal spherical harmonics.
//!
//! The convention is the "real solid harmonic" one without Condon-Shortley
//! phase: `Y_l^m ∝ P_l^m(cos θ) cos(mφ)` for `m > 0`, `∝ P_l^|m| sin(|m|φ)` for
//! `m < 0`, so that `Y_1^1 ∝ x`, `Y_1^{-1} ∝ y` and `Y_1^0 ∝ z`.
//!
//! Evaluation never goes through polar angles. The associated Legendre
//! factor is carried as `Q_l^m(z) = P̄_l^m / sin^m θ`, a polynomial in `z`,
//! and the azimuthal factor as `Re/Im (x + iy)^m`. The product is therefore a
//! polynomial extension of `Y_l^m` to all of R³, whose Cartesian gradient is
//! obtained by differentiating the same recurrences.

use std::f64::consts::PI;

use crate::error::{Error, Result};

pub type Vec3 = [f64; 3];

/// A single `(l, m)` label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Harmonic {
    pub l: usize,
    pub m: i64,
}

impl Harmonic {
    pub fn new(l: usize, m: i64) -> Self {
        Self { l, m }
    }

    pub fn is_even(&self) -> bool {
        self.l % 2 == 0
    }

    /// Position in the dense table produced by [`HarmonicTable`].
    pub fn table_index(&self) -> usize {
        ((self.l * self.l + self.l) as i64 + self.m) as usize
    }

    /// Laplace-Beltrami eigenvalue `l(l+1)`.
    pub fn eigenvalue(&self) -> f64 {
        (self.l * (self.l + 1)) as f64
    }
}

/// Truncated real spherical harmonics basis of odd order `N`, split by parity.
///
/// Both index lists are sorted by `l` ascending and then `m` ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct SphericalBasis {
    order: usize,
    even: Vec<Harmonic>,
    odd: Vec<Harmonic>,
}

impl SphericalBasis {
    /// Builds the P_N basis. `order` must be odd and positive.
    pub fn new(order: i64) -> Result<Self> {
        if order < 1 || order % 2 == 0 {
            return Err(Error::InvalidOrder(order));
        }
        let order = order as usize;
        let mut even = Vec::new();
        let mut odd = Vec::new();
        for l in 0..=order {
            for m in -(l as i64)..=(l as i64) {
                let h = Harmonic::new(l, m);
                if h.is_even() {
                    even.push(h);
                } else {
                    odd.push(h);
                }
            }
        }
        Ok(Self { order, even, odd })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn even(&self) -> &[Harmonic] {
        &self.even
    }

    pub fn odd(&self) -> &[Harmonic] {
        &self.odd
    }

    pub fn n_even(&self) -> usize {
        self.even.len()
    }

    pub fn n_odd(&self) -> usize {
        self.odd.len()
    }

    /// Position of `h` in the even (or odd) list, if present.
    pub fn position(&self, h: Harmonic) -> Option<usize> {
        let list = if h.is_even() { &self.even } else { &self.odd };
        list.binary_search(&h).ok()
    }
}

/// Evaluates a single orthonormal real spherical harmonic at the unit vector `s`.
pub fn real_harmonic(l: i64, m: i64, s: Vec3) -> Result<f64> {
    if l < 0 || m.abs() > l {
        return Err(Error::InvalidHarmonic { l, m });
    }
    let mut table = HarmonicTable::new(l as usize);
    table.evaluate(s);
    Ok(table.value(Harmonic::new(l as usize, m)))
}

/// Scratch space evaluating every `Y_l^m` with `l <= max_l` at one point,
/// optionally together with the Cartesian gradient of its polynomial extension.
#[derive(Debug, Clone)]
pub struct HarmonicTable {
    max_l: usize,
    values: Vec<f64>,
    gradients: Vec<Vec3>,
    // Q_l^m and dQ/dz, stored at l*(l+1)/2 + m for m >= 0
    q: Vec<f64>,
    dq: Vec<f64>,
    cos_m: Vec<f64>,
    sin_m: Vec<f64>,
}

impl HarmonicTable {
    pub fn new(max_l: usize) -> Self {
        let n = (max_l + 1) * (max_l + 1);
        let nq = (max_l + 1) * (max_l + 2) / 2;
        Self {
            max_l,
            values: vec![0.0; n],
            gradients: vec![[0.0; 3]; n],
            q: vec![0.0; nq],
            dq: vec![0.0; nq],
            cos_m: vec![0.0; max_l + 1],
            sin_m: vec![0.0; max_l + 1],
        }
    }

    pub fn max_l(&self) -> usize {
        self.max_l
    }

    fn qi(l: usize, m: usize) -> usize {
        l * (l + 1) / 2 + m
    }

    fn legendre(&mut self, z: f64) {
        let lmax = self.max_l;
        self.q[0] = 0.5 / PI.sqrt();
        self.dq[0] = 0.0;
        for m in 0..=lmax {
            let mm = Self::qi(m, m);
            if m > 0 {
                let prev = Self::qi(m - 1, m - 1);
                let f = ((2 * m + 1) as f64 / (2 * m) as f64).sqrt();
                self.q[mm] = f * self.q[prev];
                self.dq[mm] = 0.0;
            }
            if m < lmax {
                let next = Self::qi(m + 1, m);
                let f = ((2 * m + 3) as f64).sqrt();
                self.q[next] = f * z * self.q[mm];
                self.dq[next] = f * self.q[mm];
            }
            for l in (m + 2)..=lmax {
                let (lf, mf) = (l as f64, m as f64);
                let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
                let b = (((lf - 1.0) * (lf - 1.0) - mf * mf) / (4.0 * (lf - 1.0) * (lf - 1.0) - 1.0))
                    .sqrt();
                let (i1, i2) = (Self::qi(l - 1, m), Self::qi(l - 2, m));
                self.q[Self::qi(l, m)] = a * (z * self.q[i1] - b * self.q[i2]);
                self.dq[Self::qi(l, m)] = a * (self.q[i1] + z * self.dq[i1] - b * self.dq[i2]);
            }
        }
    }

    fn azimuthal(&mut self, x: f64, y: f64) {
        self.cos_m[0] = 1.0;
        self.sin_m[0] = 0.0;
        for m in 1..=self.max_l {
            let (c, s) = (self.cos_m[m - 1], self.sin_m[m - 1]);
            self.cos_m[m] = x * c - y * s;
            self.sin_m[m] = x * s + y * c;
        }
    }

    /// Evaluates all harmonic values at `s`.
    pub fn evaluate(&mut self, s: Vec3) {
        self.legendre(s[2]);
        self.azimuthal(s[0], s[1]);
        let sqrt2 = std::f64::consts::SQRT_2;
        for l in 0..=self.max_l {
            let base = l * l + l;
            self.values[base] = self.q[Self::qi(l, 0)];
            for m in 1..=l {
                let q = sqrt2 * self.q[Self::qi(l, m)];
                self.values[base + m] = q * self.cos_m[m];
                self.values[base - m] = q * self.sin_m[m];
            }
        }
    }

    /// Evaluates values and Cartesian gradients of the polynomial extensions.
    ///
    /// The tangential part of the gradient (and hence `s × ∇_s Y`) does not
    /// depend on the chosen extension.
    pub fn evaluate_with_gradient(&mut self, s: Vec3) {
        self.evaluate(s);
        let sqrt2 = std::f64::consts::SQRT_2;
        for l in 0..=self.max_l {
            let base = l * l + l;
            self.gradients[base] = [0.0, 0.0, self.dq[Self::qi(l, 0)]];
            for m in 1..=l {
                let q = sqrt2 * self.q[Self::qi(l, m)];
                let dq = sqrt2 * self.dq[Self::qi(l, m)];
                let mf = m as f64;
                let (c1, s1) = (self.cos_m[m - 1], self.sin_m[m - 1]);
                self.gradients[base + m] = [q * mf * c1, -q * mf * s1, dq * self.cos_m[m]];
                self.gradients[base - m] = [q * mf * s1, q * mf * c1, dq * self.sin_m[m]];
            }
        }
    }

    pub fn value(&self, h: Harmonic) -> f64 {
        self.values[h.table_index()]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Surface gradient `∇_s Y` at the last evaluation point `s`.
    pub fn surface_gradient(&self, h: Harmonic, s: Vec3) -> Vec3 {
        let g = self.gradients[h.table_index()];
        let radial = dot(g, s);
        [g[0] - radial * s[0], g[1] - radial * s[1], g[2] - radial * s[2]]
    }

    /// Rotation generator `s × ∇_s Y` at the last evaluation point `s`.
    pub fn rotation(&self, h: Harmonic, s: Vec3) -> Vec3 {
        cross(s, self.gradients[h.table_index()])
    }
}

pub(crate) fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(v: Vec3) -> Vec3 {
        let n = dot(v, v).sqrt();
        [v[0] / n, v[1] / n, v[2] / n]
    }

    #[test]
    fn rejects_even_and_nonpositive_orders() {
        assert!(SphericalBasis::new(2).is_err());
        assert!(SphericalBasis::new(0).is_err());
        assert!(SphericalBasis::new(-3).is_err());
    }

    #[test]
    fn order_one_layout() {
        let b = SphericalBasis::new(1).unwrap();
        assert_eq!(b.even(), &[Harmonic::new(0, 0)]);
        assert_eq!(
            b.odd(),
            &[Harmonic::new(1, -1), Harmonic::new(1, 0), Harmonic::new(1, 1)]
        );
    }

    #[test]
    fn order_five_counts() {
        let b = SphericalBasis::new(5).unwrap();
        assert_eq!(b.n_even(), 15);
        assert_eq!(b.n_odd(), 21);
        assert_eq!(b.position(Harmonic::new(4, 4)), Some(14));
        assert_eq!(b.position(Harmonic::new(3, -3)), Some(3));
    }

    #[test]
    fn closed_form_values() {
        let s = unit([0.3, -0.5, 0.8]);
        let y00 = real_harmonic(0, 0, s).unwrap();
        assert!((y00 - 0.282_094_791_773_878_14).abs() < 1e-15);
        let y10 = real_harmonic(1, 0, [0.0, 0.0, 1.0]).unwrap();
        assert!((y10 - (3.0 / (4.0 * PI)).sqrt()).abs() < 1e-15);
        assert!((y10 - 0.488_602_5).abs() < 1e-7);
        assert_eq!(real_harmonic(2, 1, [1.0, 0.0, 0.0]).unwrap(), 0.0);

        let c1 = (3.0 / (4.0 * PI)).sqrt();
        assert!((real_harmonic(1, 1, s).unwrap() - c1 * s[0]).abs() < 1e-15);
        assert!((real_harmonic(1, -1, s).unwrap() - c1 * s[1]).abs() < 1e-15);
        let c2 = 0.5 * (15.0 / PI).sqrt();
        assert!((real_harmonic(2, 1, s).unwrap() - c2 * s[0] * s[2]).abs() < 1e-14);
        assert!((real_harmonic(2, -2, s).unwrap() - c2 * s[0] * s[1]).abs() < 1e-14);
        let y20 = 0.25 * (5.0 / PI).sqrt() * (3.0 * s[2] * s[2] - 1.0);
        assert!((real_harmonic(2, 0, s).unwrap() - y20).abs() < 1e-14);
    }

    #[test]
    fn invalid_pairs_rejected() {
        assert!(real_harmonic(1, 2, [0.0, 0.0, 1.0]).is_err());
        assert!(real_harmonic(-1, 0, [0.0, 0.0, 1.0]).is_err());
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let s = unit([0.2, 0.7, -0.4]);
        let mut t = HarmonicTable::new(6);
        t.evaluate_with_gradient(s);
        let h = 1e-6;
        let mut plus = HarmonicTable::new(6);
        let mut minus = HarmonicTable::new(6);
        for l in 0..=6usize {
            for m in -(l as i64)..=(l as i64) {
                let hm = Harmonic::new(l, m);
                let g = t.surface_gradient(hm, s);
                // derivative of Y(x/|x|) along each axis equals the tangential gradient
                for axis in 0..3 {
                    let mut p = s;
                    p[axis] += h;
                    let mut q = s;
                    q[axis] -= h;
                    plus.evaluate(unit(p));
                    minus.evaluate(unit(q));
                    let fd = (plus.value(hm) - minus.value(hm)) / (2.0 * h);
                    assert!((fd - g[axis]).abs() < 1e-7, "l={l} m={m} axis={axis}");
                }
            }
        }
    }

    #[test]
    fn azimuthal_rotation_acts_as_phi_derivative() {
        let s = unit([-0.6, 0.1, 0.35]);
        let mut t = HarmonicTable::new(5);
        t.evaluate_with_gradient(s);
        for l in 0..=5usize {
            for m in 1..=(l as i64) {
                let rz_cos = t.rotation(Harmonic::new(l, m), s)[2];
                let rz_sin = t.rotation(Harmonic::new(l, -m), s)[2];
                let (ys, yc) = (t.value(Harmonic::new(l, -m)), t.value(Harmonic::new(l, m)));
                assert!((rz_cos + m as f64 * ys).abs() < 1e-13);
                assert!((rz_sin - m as f64 * yc).abs() < 1e-13);
            }
        }
    }
}

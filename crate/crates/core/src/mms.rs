//! Manufactured solutions `ψ = χ(x, y) f(ε) Σ_{l ≤ L} Y_l⁰(s) / (l+1)²` with
//! `χ = sin(πx) sin(πy)`, and the sources that make them exact.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harmonics::{Harmonic, HarmonicTable, SphereQuadrature, SphericalBasis, Vec3};
use crate::model::{ModelCoefficients, MomentProjector, ScalarForm, SourceTerm};

/// `f(ε) = constant + linear ε + exponential e^{ε - shift}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnergyProfile {
    #[serde(default)]
    pub constant: f64,
    #[serde(default)]
    pub linear: f64,
    #[serde(default)]
    pub exponential: f64,
    #[serde(default)]
    pub shift: f64,
}

impl EnergyProfile {
    /// `f = ε_max - ε`.
    pub fn linear_to(max: f64) -> Self {
        Self {
            constant: max,
            linear: -1.0,
            exponential: 0.0,
            shift: 0.0,
        }
    }

    /// `f = 1 - e^{ε - ε_max}`.
    pub fn saturating_to(max: f64) -> Self {
        Self {
            constant: 1.0,
            linear: 0.0,
            exponential: -1.0,
            shift: max,
        }
    }

    pub fn eval(&self, e: f64) -> f64 {
        self.constant + self.linear * e + self.exponential * (e - self.shift).exp()
    }

    pub fn derivative(&self, e: f64) -> f64 {
        self.linear + self.exponential * (e - self.shift).exp()
    }
}

pub fn profile_chi(x: f64, y: f64) -> f64 {
    (PI * x).sin() * (PI * y).sin()
}

pub fn profile_chi_gradient(x: f64, y: f64) -> [f64; 2] {
    [
        PI * (PI * x).cos() * (PI * y).sin(),
        PI * (PI * x).sin() * (PI * y).cos(),
    ]
}

/// Exact angular moments of a reference solution, used by the error norms.
pub trait ExactMoments: Sync {
    /// Harmonics with possibly nonzero moments.
    fn support(&self) -> Vec<Harmonic>;
    /// Moments and their `(∂_x, ∂_y)` gradients, in `support` order.
    fn moments_at(&self, x: f64, y: f64, energy: f64, values: &mut [f64], gradients: &mut [[f64; 2]]);
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManufacturedCase {
    pub coefficients: ModelCoefficients,
    pub profile: EnergyProfile,
    /// Truncation degree `L` of the exact solution.
    pub max_degree: usize,
}

/// Named manufactured experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CasePreset {
    /// Spatially varying `S = T = 1 + r²`, linear profile, `L = 2`.
    #[serde(rename = "1")]
    Spatial,
    /// Constant coefficients, linear profile, `L = 20`.
    #[serde(rename = "2")]
    Angular,
    /// `S = (1 + r²) ε³`, `T = (1 + r²) ε²`, saturating profile, `L = 2`.
    #[serde(rename = "3")]
    Energy,
    /// As `Energy` but with `S = e³ (1 + r²)`, `T = e² (1 + r²)`.
    #[serde(rename = "3e")]
    EnergyScaled,
}

impl std::str::FromStr for CasePreset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "1" => Ok(Self::Spatial),
            "2" => Ok(Self::Angular),
            "3" => Ok(Self::Energy),
            "3e" => Ok(Self::EnergyScaled),
            other => Err(Error::UnknownPreset(other.to_string())),
        }
    }
}

impl CasePreset {
    pub fn id(self) -> &'static str {
        match self {
            Self::Spatial => "1",
            Self::Angular => "2",
            Self::Energy => "3",
            Self::EnergyScaled => "3e",
        }
    }
}

/// Discretization knobs of a single run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Discretization {
    pub order: i64,
    pub inv_h: usize,
    pub energy_step: f64,
}

pub const ENERGY_MIN: f64 = 1.0;
pub const ENERGY_MAX: f64 = 2.0;

impl ManufacturedCase {
    pub fn preset(p: CasePreset) -> (Self, Discretization) {
        let radial = ScalarForm::new(1.0, 1, 0);
        let field = |f: ScalarForm| [ScalarForm::ZERO, ScalarForm::ZERO, f];
        match p {
            CasePreset::Spatial => (
                Self {
                    coefficients: ModelCoefficients {
                        stopping: radial,
                        transport: radial,
                        field: field(ScalarForm::new(-1.0, 0, 1)),
                    },
                    profile: EnergyProfile::linear_to(ENERGY_MAX),
                    max_degree: 2,
                },
                Discretization {
                    order: 5,
                    inv_h: 16,
                    energy_step: 1e-2,
                },
            ),
            CasePreset::Angular => (
                Self {
                    coefficients: ModelCoefficients {
                        stopping: ScalarForm::constant(1.0),
                        transport: ScalarForm::constant(1.0),
                        field: field(ScalarForm::constant(-1.0)),
                    },
                    profile: EnergyProfile::linear_to(ENERGY_MAX),
                    max_degree: 20,
                },
                Discretization {
                    order: 5,
                    inv_h: 64,
                    energy_step: 1e-2,
                },
            ),
            CasePreset::Energy | CasePreset::EnergyScaled => {
                let (s, t) = if p == CasePreset::Energy {
                    (ScalarForm::new(1.0, 1, 3), ScalarForm::new(1.0, 1, 2))
                } else {
                    let e = std::f64::consts::E;
                    (ScalarForm::new(e.powi(3), 1, 0), ScalarForm::new(e * e, 1, 0))
                };
                (
                    Self {
                        coefficients: ModelCoefficients {
                            stopping: s,
                            transport: t,
                            field: field(ScalarForm::new(-1.0, 0, 1)),
                        },
                        profile: EnergyProfile::saturating_to(ENERGY_MAX),
                        max_degree: 2,
                    },
                    Discretization {
                        order: 5,
                        inv_h: 64,
                        energy_step: 1.0 / 32.0,
                    },
                )
            }
        }
    }

    pub fn weight(l: usize) -> f64 {
        1.0 / ((l + 1) * (l + 1)) as f64
    }

    fn angular(&self, table: &HarmonicTable) -> f64 {
        (0..=self.max_degree)
            .map(|l| Self::weight(l) * table.value(Harmonic::new(l, 0)))
            .sum()
    }

    pub fn exact_solution(&self, x: f64, y: f64, s: Vec3, energy: f64) -> f64 {
        let mut table = HarmonicTable::new(self.max_degree);
        table.evaluate(s);
        profile_chi(x, y) * self.profile.eval(energy) * self.angular(&table)
    }

    /// The source term, evaluated term by term.
    pub fn manufactured_source(&self, x: f64, y: f64, s: Vec3, energy: f64) -> f64 {
        let terms = self.source_terms(x, y, s, energy);
        terms.iter().sum()
    }

    /// `[-∂_ε(Sψ), s·∇_r ψ, G·s×∇_s ψ, -T Δ_s ψ]` at one point.
    pub fn source_terms(&self, x: f64, y: f64, s: Vec3, energy: f64) -> [f64; 4] {
        let c = &self.coefficients;
        let mut table = HarmonicTable::new(self.max_degree);
        table.evaluate_with_gradient(s);
        let p = self.angular(&table);
        let (chi, grad) = (profile_chi(x, y), profile_chi_gradient(x, y));
        let f = self.profile.eval(energy);
        let sf = c.stopping.d_energy(x, y, energy) * f + c.stopping.eval(x, y, energy) * self.profile.derivative(energy);
        let mut rot = [0.0; 3];
        let mut lb = 0.0;
        for l in 0..=self.max_degree {
            let h = Harmonic::new(l, 0);
            let r = table.rotation(h, s);
            for i in 0..3 {
                rot[i] += Self::weight(l) * r[i];
            }
            lb += Self::weight(l) * h.eigenvalue() * table.value(h);
        }
        let g = c.field_at(x, y, energy);
        [
            -sf * chi * p,
            f * (grad[0] * s[0] + grad[1] * s[1]) * p,
            f * chi * (g[0] * rot[0] + g[1] * rot[1] + g[2] * rot[2]),
            c.transport.eval(x, y, energy) * f * chi * lb,
        ]
    }
}

impl ExactMoments for ManufacturedCase {
    fn support(&self) -> Vec<Harmonic> {
        (0..=self.max_degree).map(|l| Harmonic::new(l, 0)).collect()
    }

    fn moments_at(&self, x: f64, y: f64, energy: f64, values: &mut [f64], gradients: &mut [[f64; 2]]) {
        let f = self.profile.eval(energy);
        let chi = profile_chi(x, y);
        let grad = profile_chi_gradient(x, y);
        for l in 0..=self.max_degree {
            let c = Self::weight(l) * f;
            values[l] = c * chi;
            gradients[l] = [c * grad[0], c * grad[1]];
        }
    }
}

impl SourceTerm for ManufacturedCase {
    fn eval(&self, x: f64, y: f64, s: Vec3, energy: f64) -> f64 {
        self.manufactured_source(x, y, s, energy)
    }

    fn projector<'a>(&'a self, basis: &SphericalBasis) -> Box<dyn MomentProjector + 'a> {
        Box::new(SeparableProjector::new(self, basis))
    }
}

/// Moments of the manufactured source: each term is a spatial-energy factor
/// times a fixed angular function whose moments are precomputed.
pub struct SeparableProjector<'a> {
    case: &'a ManufacturedCase,
    // [P, s_x P, s_y P, LB P, (s×∇P)_x, (s×∇P)_y, (s×∇P)_z], even then odd
    even: [Vec<f64>; 7],
    odd: [Vec<f64>; 7],
}

impl<'a> SeparableProjector<'a> {
    pub fn new(case: &'a ManufacturedCase, basis: &SphericalBasis) -> Self {
        let l = case.max_degree;
        let quad = SphereQuadrature::product((l + basis.order() + 2) as i64).expect("valid exactness");
        let mut table = HarmonicTable::new(l.max(basis.order()));
        let mut even: [Vec<f64>; 7] = Default::default();
        let mut odd: [Vec<f64>; 7] = Default::default();
        for v in even.iter_mut() {
            *v = vec![0.0; basis.n_even()];
        }
        for v in odd.iter_mut() {
            *v = vec![0.0; basis.n_odd()];
        }
        for (&s, &w) in quad.nodes.iter().zip(&quad.weights) {
            table.evaluate_with_gradient(s);
            let mut f = [0.0; 7];
            for deg in 0..=l {
                let h = Harmonic::new(deg, 0);
                let c = ManufacturedCase::weight(deg);
                let y = table.value(h);
                f[0] += c * y;
                f[3] += c * h.eigenvalue() * y;
                let r = table.rotation(h, s);
                for i in 0..3 {
                    f[4 + i] += c * r[i];
                }
            }
            f[1] = s[0] * f[0];
            f[2] = s[1] * f[0];
            for (list, out) in [(basis.even(), &mut even), (basis.odd(), &mut odd)] {
                for (k, h) in list.iter().enumerate() {
                    let y = w * table.value(*h);
                    for j in 0..7 {
                        out[j][k] += f[j] * y;
                    }
                }
            }
        }
        Self { case, even, odd }
    }
}

impl MomentProjector for SeparableProjector<'_> {
    fn moments(&self, x: f64, y: f64, energy: f64, even: &mut [f64], odd: &mut [f64]) {
        let c = &self.case.coefficients;
        let prof = &self.case.profile;
        let (chi, grad) = (profile_chi(x, y), profile_chi_gradient(x, y));
        let f = prof.eval(energy);
        let sf = c.stopping.d_energy(x, y, energy) * f + c.stopping.eval(x, y, energy) * prof.derivative(energy);
        let g = c.field_at(x, y, energy);
        let a = [
            -sf * chi,
            f * grad[0],
            f * grad[1],
            c.transport.eval(x, y, energy) * f * chi,
            f * chi * g[0],
            f * chi * g[1],
            f * chi * g[2],
        ];
        for (out, tab) in [(even, &self.even), (odd, &self.odd)] {
            for (k, o) in out.iter_mut().enumerate() {
                *o = (0..7).map(|j| a[j] * tab[j][k]).sum();
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harmonics::real_harmonic;

    #[test]
    fn presets_vanish_at_top_energy_and_on_boundary() {
        for p in [CasePreset::Spatial, CasePreset::Angular, CasePreset::Energy, CasePreset::EnergyScaled] {
            let (case, _) = ManufacturedCase::preset(p);
            assert!(case.profile.eval(ENERGY_MAX).abs() < 1e-14);
            let s = [0.6, 0.0, 0.8];
            assert!(case.exact_solution(0.3, 0.2, s, ENERGY_MAX).abs() < 1e-14);
            assert!(case.exact_solution(-1.0, 0.4, s, 1.3).abs() < 1e-14);
            assert!(case.exact_solution(0.4, 1.0, s, 1.3).abs() < 1e-14);
        }
    }

    #[test]
    fn pointwise_value_by_direct_sum() {
        let (case, d) = ManufacturedCase::preset(CasePreset::Spatial);
        assert_eq!(d.order, 5);
        let s = [0.0, 0.0, 1.0];
        let direct: f64 = (0..=2)
            .map(|l| real_harmonic(l, 0, s).unwrap() / ((l + 1) * (l + 1)) as f64)
            .sum();
        assert!((case.exact_solution(0.5, 0.5, s, 1.0) - direct).abs() < 1e-14);
        // Y_l^0(e_z) = sqrt((2l+1)/4π)
        let closed: f64 = (0..=2)
            .map(|l| ((2 * l + 1) as f64 / (4.0 * PI)).sqrt() / ((l + 1) * (l + 1)) as f64)
            .sum();
        assert!((direct - closed).abs() < 1e-14);
    }

    #[test]
    fn lorentz_term_vanishes_for_presets() {
        for p in [CasePreset::Spatial, CasePreset::Angular, CasePreset::Energy] {
            let (case, _) = ManufacturedCase::preset(p);
            let s = [0.48, -0.6, 0.64];
            assert!(case.source_terms(0.3, -0.7, s, 1.4)[2].abs() < 1e-13);
        }
    }

    #[test]
    fn separable_moments_match_quadrature() {
        let (case, _) = ManufacturedCase::preset(CasePreset::Spatial);
        let mut tilted = case;
        tilted.coefficients.field = [ScalarForm::constant(0.7), ScalarForm::new(-0.3, 0, 1), ScalarForm::constant(1.1)];
        let basis = SphericalBasis::new(5).unwrap();
        let fast = SeparableProjector::new(&tilted, &basis);
        let slow = crate::model::QuadratureProjector::new(&tilted, &basis, 16);
        let (mut e1, mut o1) = (vec![0.0; basis.n_even()], vec![0.0; basis.n_odd()]);
        let (mut e2, mut o2) = (e1.clone(), o1.clone());
        fast.moments(0.31, -0.52, 1.37, &mut e1, &mut o1);
        slow.moments(0.31, -0.52, 1.37, &mut e2, &mut o2);
        for (a, b) in e1.iter().chain(&o1).zip(e2.iter().chain(&o2)) {
            assert!((a - b).abs() < 1e-12, "{a} {b}");
        }
    }

    #[test]
    fn preset_ids_parse() {
        assert_eq!("3e".parse::<CasePreset>().unwrap(), CasePreset::EnergyScaled);
        assert!(matches!("7".parse::<CasePreset>(), Err(Error::UnknownPreset(_))));
        assert_eq!(ManufacturedCase::preset(CasePreset::Angular).0.max_degree, 20);
    }
}

//! Problem data: coefficients, energy grid and source term.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harmonics::{gauss_legendre_interval, SphericalBasis, SphereQuadrature, Vec3};
use crate::mesh::Mesh2D;

/// Coefficient of the form `scale · (1 + x² + y²)^radial_power · ε^energy_power · exp(energy_rate · ε)`.
///
/// Covers constants, the radial profiles and the energy powers/exponentials
/// used by the manufactured test cases.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalarForm {
    #[serde(default = "one")]
    pub scale: f64,
    #[serde(default)]
    pub radial_power: i32,
    #[serde(default)]
    pub energy_power: i32,
    #[serde(default)]
    pub energy_rate: f64,
}

fn one() -> f64 {
    1.0
}

impl ScalarForm {
    pub const ZERO: ScalarForm = ScalarForm::constant(0.0);

    pub const fn constant(c: f64) -> Self {
        Self {
            scale: c,
            radial_power: 0,
            energy_power: 0,
            energy_rate: 0.0,
        }
    }

    pub const fn new(scale: f64, radial_power: i32, energy_power: i32) -> Self {
        Self {
            scale,
            radial_power,
            energy_power,
            energy_rate: 0.0,
        }
    }

    pub fn eval(&self, x: f64, y: f64, energy: f64) -> f64 {
        let mut v = self.scale;
        if self.radial_power != 0 {
            v *= (1.0 + x * x + y * y).powi(self.radial_power);
        }
        if self.energy_power != 0 {
            v *= energy.powi(self.energy_power);
        }
        if self.energy_rate != 0.0 {
            v *= (self.energy_rate * energy).exp();
        }
        v
    }

    /// `∂_ε` of the form.
    pub fn d_energy(&self, x: f64, y: f64, energy: f64) -> f64 {
        self.eval(x, y, energy) * (self.energy_power as f64 / energy + self.energy_rate)
    }

    pub fn is_zero(&self) -> bool {
        self.scale == 0.0
    }
}

/// Stopping power `S`, angular diffusion `T` and scaled magnetic field `G`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelCoefficients {
    pub stopping: ScalarForm,
    pub transport: ScalarForm,
    pub field: [ScalarForm; 3],
}

impl ModelCoefficients {
    pub fn field_at(&self, x: f64, y: f64, energy: f64) -> Vec3 {
        [
            self.field[0].eval(x, y, energy),
            self.field[1].eval(x, y, energy),
            self.field[2].eval(x, y, energy),
        ]
    }
}

/// Equidistant energy nodes `ε^m = ε_min + m Δε`, `m = 0..=M`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyGrid {
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl EnergyGrid {
    pub fn new(min: f64, max: f64, steps: usize) -> Result<Self> {
        if steps == 0 || !(max > min) || !min.is_finite() || !max.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "({min}, {max}) with {steps} steps"
            )));
        }
        Ok(Self { min, max, steps })
    }

    /// Grid with the step closest to `step`, rounded to an integer count.
    pub fn with_step(min: f64, max: f64, step: f64) -> Result<Self> {
        let steps = ((max - min) / step).round();
        if !(steps >= 1.0) {
            return Err(Error::InvalidGrid(format!("step {step} on ({min}, {max})")));
        }
        Self::new(min, max, steps as usize)
    }

    pub fn step(&self) -> f64 {
        (self.max - self.min) / self.steps as f64
    }

    pub fn node(&self, m: usize) -> f64 {
        if m == self.steps {
            self.max
        } else {
            self.min + m as f64 * self.step()
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.steps).map(|m| self.node(m))
    }
}

/// Piecewise-constant realization of the coefficients at one energy node,
/// sampled at cell centroids.
#[derive(Debug, Clone, PartialEq)]
pub struct CellCoefficients {
    pub energy: f64,
    pub stopping: Vec<f64>,
    pub transport: Vec<f64>,
    pub field: [Vec<f64>; 3],
}

impl CellCoefficients {
    pub fn sample(coeffs: &ModelCoefficients, mesh: &Mesh2D, energy: f64) -> Result<Self> {
        let n = mesh.n_cells();
        let mut out = Self {
            energy,
            stopping: Vec::with_capacity(n),
            transport: Vec::with_capacity(n),
            field: [
                Vec::with_capacity(n),
                Vec::with_capacity(n),
                Vec::with_capacity(n),
            ],
        };
        for c in 0..n {
            let [x, y] = mesh.centroid(c);
            let s = coeffs.stopping.eval(x, y, energy);
            let t = coeffs.transport.eval(x, y, energy);
            for (name, value) in [("S", s), ("T", t)] {
                if !(value > 0.0) {
                    return Err(Error::NonPositiveCoefficient {
                        name,
                        cell: c,
                        energy,
                        value,
                    });
                }
            }
            out.stopping.push(s);
            out.transport.push(t);
            for i in 0..3 {
                out.field[i].push(coeffs.field[i].eval(x, y, energy));
            }
        }
        Ok(out)
    }
}

/// Cellwise coefficients at every energy node, `m = 0..=M`.
pub fn discretize_coefficients(
    coeffs: &ModelCoefficients,
    mesh: &Mesh2D,
    grid: &EnergyGrid,
) -> Result<Vec<CellCoefficients>> {
    grid.nodes()
        .map(|e| CellCoefficients::sample(coeffs, mesh, e))
        .collect()
}

/// Angular moments of a source at fixed `(x, y, ε)`, split by parity.
pub trait MomentProjector: Sync {
    fn moments(&self, x: f64, y: f64, energy: f64, even: &mut [f64], odd: &mut [f64]);
}

/// Source density `q(r, s, ε)`.
pub trait SourceTerm: Sync {
    fn eval(&self, x: f64, y: f64, s: Vec3, energy: f64) -> f64;

    /// Projector onto the given basis. The default integrates `eval` with a
    /// product rule; sources with known angular structure should override it.
    fn projector<'a>(&'a self, basis: &SphericalBasis) -> Box<dyn MomentProjector + 'a> {
        Box::new(QuadratureProjector::new(self, basis, 2 * basis.order() + 12))
    }
}

/// Moment projection by direct angular quadrature of a pointwise source.
pub struct QuadratureProjector<'a, S: ?Sized> {
    source: &'a S,
    quad: SphereQuadrature,
    // weight · Y_k at each node, even and odd
    even: Vec<Vec<f64>>,
    odd: Vec<Vec<f64>>,
}

impl<'a, S: SourceTerm + ?Sized> QuadratureProjector<'a, S> {
    pub fn new(source: &'a S, basis: &SphericalBasis, exactness: usize) -> Self {
        let quad = SphereQuadrature::product(exactness as i64).expect("nonnegative exactness");
        let mut table = crate::harmonics::HarmonicTable::new(basis.order());
        let mut even = Vec::with_capacity(quad.len());
        let mut odd = Vec::with_capacity(quad.len());
        for (&s, &w) in quad.nodes.iter().zip(&quad.weights) {
            table.evaluate(s);
            even.push(basis.even().iter().map(|h| w * table.value(*h)).collect());
            odd.push(basis.odd().iter().map(|h| w * table.value(*h)).collect());
        }
        Self {
            source,
            quad,
            even,
            odd,
        }
    }
}

impl<S: SourceTerm + ?Sized> MomentProjector for QuadratureProjector<'_, S> {
    fn moments(&self, x: f64, y: f64, energy: f64, even: &mut [f64], odd: &mut [f64]) {
        even.fill(0.0);
        odd.fill(0.0);
        for (j, &s) in self.quad.nodes.iter().enumerate() {
            let q = self.source.eval(x, y, s, energy);
            for (e, w) in even.iter_mut().zip(&self.even[j]) {
                *e += q * w;
            }
            for (o, w) in odd.iter_mut().zip(&self.odd[j]) {
                *o += q * w;
            }
        }
    }
}

/// Number of Gauss points used for the energy averages.
pub const DEFAULT_AVERAGE_POINTS: usize = 3;

/// How the source enters step `m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum SourceSampling {
    /// Gauss average over `[ε^m, ε^{m+1}]`.
    Average { points: usize },
    /// Point value at the node `ε^m`, where the coefficients are frozen.
    Node,
}

impl Default for SourceSampling {
    fn default() -> Self {
        Self::Average {
            points: DEFAULT_AVERAGE_POINTS,
        }
    }
}

/// Local energy average `q̄^m = (1/Δε) ∫_{ε^m}^{ε^{m+1}} q dε`, by Gauss
/// quadrature, or a point sample standing in for it.
pub struct AveragedSource<'a, S: ?Sized> {
    source: &'a S,
    energies: Vec<f64>,
    weights: Vec<f64>,
}

pub fn local_average_source<'a, S: SourceTerm + ?Sized>(
    source: &'a S,
    m: usize,
    grid: &EnergyGrid,
    points: usize,
) -> Result<AveragedSource<'a, S>> {
    sampled_source(source, m, grid, SourceSampling::Average { points })
}

pub fn sampled_source<'a, S: SourceTerm + ?Sized>(
    source: &'a S,
    m: usize,
    grid: &EnergyGrid,
    sampling: SourceSampling,
) -> Result<AveragedSource<'a, S>> {
    if m >= grid.steps {
        return Err(Error::StepOutOfRange {
            index: m,
            steps: grid.steps,
        });
    }
    let (a, b) = (grid.node(m), grid.node(m + 1));
    let (energies, weights) = match sampling {
        SourceSampling::Average { points } => {
            let (e, w) = gauss_legendre_interval(points.max(1), a, b);
            let inv = 1.0 / (b - a);
            (e, w.into_iter().map(|w| w * inv).collect())
        }
        SourceSampling::Node => (vec![a], vec![1.0]),
    };
    Ok(AveragedSource {
        source,
        energies,
        weights,
    })
}

impl<S: SourceTerm + ?Sized> AveragedSource<'_, S> {
    pub fn eval(&self, x: f64, y: f64, s: Vec3) -> f64 {
        self.energies
            .iter()
            .zip(&self.weights)
            .map(|(&e, &w)| w * self.source.eval(x, y, s, e))
            .sum()
    }

    /// Averaged moments using `projector` (built from the same source).
    pub fn moments(
        &self,
        projector: &dyn MomentProjector,
        x: f64,
        y: f64,
        even: &mut [f64],
        odd: &mut [f64],
        scratch: &mut (Vec<f64>, Vec<f64>),
    ) {
        even.fill(0.0);
        odd.fill(0.0);
        scratch.0.resize(even.len(), 0.0);
        scratch.1.resize(odd.len(), 0.0);
        for (&e, &w) in self.energies.iter().zip(&self.weights) {
            projector.moments(x, y, e, &mut scratch.0, &mut scratch.1);
            for (a, b) in even.iter_mut().zip(&scratch.0) {
                *a += w * b;
            }
            for (a, b) in odd.iter_mut().zip(&scratch.1) {
                *a += w * b;
            }
        }
    }
}

/// The zero source.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroSource;

impl SourceTerm for ZeroSource {
    fn eval(&self, _: f64, _: f64, _: Vec3, _: f64) -> f64 {
        0.0
    }
}

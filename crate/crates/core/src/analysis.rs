//! Error norms against exact moments, convergence orders and the discrete
//! energy-stability functional.

use std::collections::BTreeSet;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fem::{p1_element_mass, TriangleRule};
use crate::harmonics::{Harmonic, HarmonicTable, SphereQuadrature, SphericalBasis};
use crate::mesh::Mesh2D;
use crate::mms::ExactMoments;
use crate::model::{sampled_source, EnergyGrid, SourceSampling, SourceTerm};
use crate::system::{PhaseSpaceField, StepView};

/// Degree of the triangle rule used for the spatial error integrals.
pub const ERROR_QUADRATURE_DEGREE: usize = 6;

/// Squared errors at one energy node.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepErrors {
    pub even: f64,
    pub odd: f64,
    /// `‖s·∇_r e⁺‖²`.
    pub streaming: f64,
}

/// `e⁺`, `e⁻` and `E⁺`, each a maximum over the energy nodes.
#[derive(Debug, Clone, Copy, PartialEq, Default, serde::Serialize)]
pub struct ErrorNorms {
    pub even: f64,
    pub odd: f64,
    pub energy: f64,
}

impl ErrorNorms {
    pub fn from_steps<'s>(steps: impl IntoIterator<Item = &'s StepErrors>) -> Self {
        let mut out = Self::default();
        let mut energy2: f64 = 0.0;
        for s in steps {
            out.even = out.even.max(s.even.sqrt());
            out.odd = out.odd.max(s.odd.sqrt());
            energy2 = energy2.max(s.even + s.streaming);
        }
        out.energy = energy2.sqrt();
        out
    }
}

/// Compares discrete fields against exact moments.
///
/// Only harmonics carried by the discrete basis or by the exact solution can
/// contribute, so all work happens on their union.
pub struct ErrorEvaluator<'a, E: ExactMoments + ?Sized> {
    exact: &'a E,
    mesh: &'a Mesh2D,
    support: Vec<Harmonic>,
    // union even/odd lists; positions of discrete and support entries in them
    n_even: usize,
    n_odd: usize,
    discrete_even: Vec<usize>,
    discrete_odd: Vec<usize>,
    support_slot: Vec<(bool, usize)>,
    // sparse streaming A_x, A_y restricted to union-even columns: (row, col, value)
    streaming: [Vec<(usize, usize, f64)>; 2],
    n_rows: usize,
    rule: TriangleRule,
}

impl<'a, E: ExactMoments + ?Sized> ErrorEvaluator<'a, E> {
    pub fn new(exact: &'a E, mesh: &'a Mesh2D, basis: &SphericalBasis) -> Result<Self> {
        let support = exact.support();
        let even: Vec<Harmonic> = basis
            .even()
            .iter()
            .chain(support.iter().filter(|h| h.is_even()))
            .copied()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let odd: Vec<Harmonic> = basis
            .odd()
            .iter()
            .chain(support.iter().filter(|h| !h.is_even()))
            .copied()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let pos = |list: &[Harmonic], h: &Harmonic| list.binary_search(h).expect("in union");
        let discrete_even = basis.even().iter().map(|h| pos(&even, h)).collect();
        let discrete_odd = basis.odd().iter().map(|h| pos(&odd, h)).collect();
        let support_slot = support
            .iter()
            .map(|h| if h.is_even() { (true, pos(&even, h)) } else { (false, pos(&odd, h)) })
            .collect();

        // s_i Y_k for union-even k lives in odd degrees up to max_l + 1
        let max_l = even.iter().map(|h| h.l).max().unwrap_or(0);
        let rows = SphericalBasis::new((max_l + 1) as i64)?;
        let quad = SphereQuadrature::product(2 * max_l as i64 + 2)?;
        let mut table = HarmonicTable::new(max_l + 1);
        let mut dense = [
            vec![0.0; rows.n_odd() * even.len()],
            vec![0.0; rows.n_odd() * even.len()],
        ];
        for (&s, &w) in quad.nodes.iter().zip(&quad.weights) {
            table.evaluate(s);
            for (c, h) in even.iter().enumerate() {
                let yc = w * table.value(*h);
                for (r, g) in rows.odd().iter().enumerate() {
                    let v = yc * table.value(*g);
                    dense[0][r * even.len() + c] += s[0] * v;
                    dense[1][r * even.len() + c] += s[1] * v;
                }
            }
        }
        let streaming = dense.map(|d| {
            d.iter()
                .enumerate()
                .filter(|(_, v)| v.abs() > 1e-14)
                .map(|(i, &v)| (i / even.len(), i % even.len(), v))
                .collect()
        });
        Ok(Self {
            exact,
            mesh,
            support,
            n_even: even.len(),
            n_odd: odd.len(),
            discrete_even,
            discrete_odd,
            support_slot,
            streaming,
            n_rows: rows.n_odd(),
            rule: TriangleRule::collapsed(ERROR_QUADRATURE_DEGREE),
        })
    }

    /// Squared errors of `field` at `energy`.
    pub fn step_errors(&self, energy: f64, field: &PhaseSpaceField) -> StepErrors {
        let mesh = self.mesh;
        let per_cell: Vec<StepErrors> = (0..mesh.n_cells())
            .into_par_iter()
            .map(|c| self.cell_errors(c, energy, field))
            .collect();
        per_cell.iter().fold(StepErrors::default(), |a, b| StepErrors {
            even: a.even + b.even,
            odd: a.odd + b.odd,
            streaming: a.streaming + b.streaming,
        })
    }

    fn cell_errors(&self, c: usize, energy: f64, field: &PhaseSpaceField) -> StepErrors {
        let mesh = self.mesh;
        let t = mesh.triangles[c];
        let area = mesh.areas[c];
        let g = mesh.gradients(c);
        let ne = field.n_even;
        // discrete gradients are cellwise constant
        let mut grad_u = vec![[0.0; 2]; ne];
        for a in 0..3 {
            for (k, v) in field.even_at(t[a]).iter().enumerate() {
                grad_u[k][0] += v * g[a][0];
                grad_u[k][1] += v * g[a][1];
            }
        }
        let mut values = vec![0.0; self.support.len()];
        let mut grads = vec![[0.0; 2]; self.support.len()];
        let mut de = vec![0.0; self.n_even];
        let mut dg = vec![[0.0; 2]; self.n_even];
        let mut dodd = vec![0.0; self.n_odd];
        let mut rows = vec![0.0; self.n_rows];
        let mut out = StepErrors::default();
        for (bary, &w) in self.rule.points.iter().zip(&self.rule.weights) {
            let [x, y] = mesh.map(c, *bary);
            self.exact.moments_at(x, y, energy, &mut values, &mut grads);
            de.fill(0.0);
            dg.fill([0.0; 2]);
            dodd.fill(0.0);
            for (k, &slot) in self.discrete_even.iter().enumerate() {
                let u: f64 = (0..3).map(|a| bary[a] * field.even_at(t[a])[k]).sum();
                de[slot] -= u;
                dg[slot][0] -= grad_u[k][0];
                dg[slot][1] -= grad_u[k][1];
            }
            for (k, &slot) in self.discrete_odd.iter().enumerate() {
                dodd[slot] -= field.odd_at(c)[k];
            }
            for (j, &(even, slot)) in self.support_slot.iter().enumerate() {
                if even {
                    de[slot] += values[j];
                    dg[slot][0] += grads[j][0];
                    dg[slot][1] += grads[j][1];
                } else {
                    dodd[slot] += values[j];
                }
            }
            rows.fill(0.0);
            for (axis, list) in self.streaming.iter().enumerate() {
                for &(r, col, v) in list {
                    rows[r] += v * dg[col][axis];
                }
            }
            let wa = w * area;
            out.even += wa * de.iter().map(|v| v * v).sum::<f64>();
            out.odd += wa * dodd.iter().map(|v| v * v).sum::<f64>();
            out.streaming += wa * rows.iter().map(|v| v * v).sum::<f64>();
        }
        out
    }

    /// Collects step errors from a transport observer.
    pub fn observe(&self, view: &StepView<'_>, into: &mut Vec<StepErrors>) {
        into.push(self.step_errors(view.energy, view.field));
    }
}

/// Estimated order of convergence between two errors whose knob differs by
/// `ratio` (2 for halving).
pub fn eoc_with_ratio(coarse: f64, fine: f64, ratio: f64) -> Result<f64> {
    if !(coarse > 0.0 && fine > 0.0) {
        return Err(Error::NonPositiveError { coarse, fine });
    }
    Ok((coarse / fine).ln() / ratio.ln())
}

/// `log₂(coarse / fine)`.
pub fn eoc(coarse: f64, fine: f64) -> Result<f64> {
    eoc_with_ratio(coarse, fine, 2.0)
}

/// One row of the discrete energy bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityEntry {
    pub index: usize,
    pub energy: f64,
    /// `⟨S^m ψ^m, ψ^m⟩ + Σ_{k≥m} Δε ⟨T^k ∇_s ψ^k, ∇_s ψ^k⟩`.
    pub functional: f64,
    /// `Σ_{k≥m} Δε ‖q̄^k‖²`.
    pub source: f64,
}

impl StabilityEntry {
    pub fn ratio(&self) -> Option<f64> {
        (self.source > 0.0).then(|| self.functional / self.source)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    /// Ordered by decreasing `m`, starting at `m = M`.
    pub entries: Vec<StabilityEntry>,
}

impl StabilityReport {
    pub fn max_ratio(&self) -> Option<f64> {
        self.entries.iter().filter_map(StabilityEntry::ratio).reduce(f64::max)
    }
}

/// Accumulates the stability functional along a backward march.
pub struct StabilityMonitor<'a> {
    mesh: &'a Mesh2D,
    basis: &'a SphericalBasis,
    grid: EnergyGrid,
    source: &'a dyn SourceTerm,
    sampling: SourceSampling,
    norm_basis: SphericalBasis,
    rule: TriangleRule,
    diffusion_sum: f64,
    source_sum: f64,
    pub report: StabilityReport,
}

impl<'a> StabilityMonitor<'a> {
    /// Source norms are computed from moments up to degree `norm_order`.
    pub fn new(
        mesh: &'a Mesh2D,
        basis: &'a SphericalBasis,
        grid: EnergyGrid,
        source: &'a dyn SourceTerm,
        sampling: SourceSampling,
        norm_order: i64,
    ) -> Result<Self> {
        Ok(Self {
            mesh,
            basis,
            grid,
            source,
            sampling,
            norm_basis: SphericalBasis::new(norm_order)?,
            rule: TriangleRule::collapsed(ERROR_QUADRATURE_DEGREE),
            diffusion_sum: 0.0,
            source_sum: 0.0,
            report: StabilityReport { entries: Vec::new() },
        })
    }

    /// `‖q̄^m‖²_{L²(R×S)}` via Parseval on the norm basis.
    pub fn source_norm_squared(&self, m: usize) -> Result<f64> {
        let avg = sampled_source(self.source, m, &self.grid, self.sampling)?;
        let projector = self.source.projector(&self.norm_basis);
        let (ne, no) = (self.norm_basis.n_even(), self.norm_basis.n_odd());
        let per_cell: Vec<f64> = (0..self.mesh.n_cells())
            .into_par_iter()
            .map(|c| {
                let mut e = vec![0.0; ne];
                let mut o = vec![0.0; no];
                let mut scratch = (Vec::new(), Vec::new());
                let mut sum = 0.0;
                for (bary, &w) in self.rule.points.iter().zip(&self.rule.weights) {
                    let [x, y] = self.mesh.map(c, *bary);
                    avg.moments(projector.as_ref(), x, y, &mut e, &mut o, &mut scratch);
                    sum += w * (e.iter().map(|v| v * v).sum::<f64>() + o.iter().map(|v| v * v).sum::<f64>());
                }
                sum * self.mesh.areas[c]
            })
            .collect();
        Ok(per_cell.iter().sum())
    }

    /// Weighted squared norm `Σ_c w_c (u⁺ᵀ M_c u⁺ + |K_c| |u⁻_c|²)` with per-moment factors.
    fn weighted(&self, field: &PhaseSpaceField, weight: &[f64], even_factor: &[f64], odd_factor: &[f64]) -> f64 {
        let mut total = 0.0;
        for (c, t) in self.mesh.triangles.iter().enumerate() {
            let me = p1_element_mass(self.mesh.areas[c] * weight[c]);
            for a in 0..3 {
                for b in 0..3 {
                    let (ua, ub) = (field.even_at(t[a]), field.even_at(t[b]));
                    total += me[a][b] * (0..ua.len()).map(|k| even_factor[k] * ua[k] * ub[k]).sum::<f64>();
                }
            }
            let uo = field.odd_at(c);
            total += self.mesh.areas[c] * weight[c] * (0..uo.len()).map(|k| odd_factor[k] * uo[k] * uo[k]).sum::<f64>();
        }
        total
    }

    pub fn observe(&mut self, view: &StepView<'_>) -> Result<()> {
        let step = self.grid.step();
        let ones_e = vec![1.0; self.basis.n_even()];
        let ones_o = vec![1.0; self.basis.n_odd()];
        let lb_e: Vec<f64> = self.basis.even().iter().map(Harmonic::eigenvalue).collect();
        let lb_o: Vec<f64> = self.basis.odd().iter().map(Harmonic::eigenvalue).collect();
        let coeffs = view.coefficients;
        if view.index < self.grid.steps {
            self.diffusion_sum += step * self.weighted(view.field, &coeffs.transport, &lb_e, &lb_o);
            self.source_sum += step * self.source_norm_squared(view.index)?;
        }
        let mass = self.weighted(view.field, &coeffs.stopping, &ones_e, &ones_o);
        self.report.entries.push(StabilityEntry {
            index: view.index,
            energy: view.energy,
            functional: mass + self.diffusion_sum,
            source: self.source_sum,
        });
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eoc_of_halving() {
        assert!((eoc(4.0, 1.0).unwrap() - 2.0).abs() < 1e-15);
        assert!((eoc_with_ratio(9.0, 1.0, 3.0).unwrap() - 2.0).abs() < 1e-15);
        assert!(eoc(0.0, 1.0).is_err());
    }

    #[test]
    fn norms_take_maximum_per_quantity() {
        let steps = [
            StepErrors { even: 4.0, odd: 1.0, streaming: 0.0 },
            StepErrors { even: 1.0, odd: 9.0, streaming: 8.0 },
        ];
        let n = ErrorNorms::from_steps(&steps);
        assert_eq!(n.even, 2.0);
        assert_eq!(n.odd, 3.0);
        assert_eq!(n.energy, 3.0);
    }
}

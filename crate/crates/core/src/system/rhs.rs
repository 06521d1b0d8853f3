use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::field::PhaseSpaceField;
use crate::fem::{p1_element_mass, TriangleRule};
use crate::harmonics::SphericalBasis;
use crate::mesh::Mesh2D;
use crate::model::{AveragedSource, MomentProjector, SourceTerm};

/// How the averaged source enters the load vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum SourceProjection {
    /// Even moments interpolated at the vertices and multiplied by the P1
    /// mass matrix; odd moments taken at the centroid times the cell area.
    #[default]
    Interpolation,
    /// Cellwise quadrature of the source against the basis functions.
    ElementQuadrature { degree: usize },
}

/// `⟨q̄, v⟩` for all test functions `v`.
pub fn source_load<S: SourceTerm + ?Sized>(
    mesh: &Mesh2D,
    basis: &SphericalBasis,
    source: &AveragedSource<'_, S>,
    projector: &dyn MomentProjector,
    projection: SourceProjection,
) -> PhaseSpaceField {
    let (ne, no) = (basis.n_even(), basis.n_odd());
    let mut load = PhaseSpaceField::zeros(mesh.n_nodes(), mesh.n_cells(), ne, no);
    let moments = |p: [f64; 2]| {
        let mut e = vec![0.0; ne];
        let mut o = vec![0.0; no];
        let mut scratch = (Vec::new(), Vec::new());
        source.moments(projector, p[0], p[1], &mut e, &mut o, &mut scratch);
        (e, o)
    };
    match projection {
        SourceProjection::Interpolation => {
            let at_nodes: Vec<Vec<f64>> = mesh.vertices.par_iter().map(|&p| moments(p).0).collect();
            let at_cells: Vec<Vec<f64>> = (0..mesh.n_cells())
                .into_par_iter()
                .map(|c| moments(mesh.centroid(c)).1)
                .collect();
            for (c, t) in mesh.triangles.iter().enumerate() {
                let me = p1_element_mass(mesh.areas[c]);
                for a in 0..3 {
                    let dst = &mut load.even[t[a] * ne..(t[a] + 1) * ne];
                    for b in 0..3 {
                        for (d, q) in dst.iter_mut().zip(&at_nodes[t[b]]) {
                            *d += me[a][b] * q;
                        }
                    }
                }
                for (d, q) in load.odd[c * no..(c + 1) * no].iter_mut().zip(&at_cells[c]) {
                    *d = mesh.areas[c] * q;
                }
            }
        }
        SourceProjection::ElementQuadrature { degree } => {
            let rule = TriangleRule::collapsed(degree);
            let per_cell: Vec<([Vec<f64>; 3], Vec<f64>)> = (0..mesh.n_cells())
                .into_par_iter()
                .map(|c| {
                    let area = mesh.areas[c];
                    let mut even = [vec![0.0; ne], vec![0.0; ne], vec![0.0; ne]];
                    let mut odd = vec![0.0; no];
                    for (bary, &w) in rule.points.iter().zip(&rule.weights) {
                        let (e, o) = moments(mesh.map(c, *bary));
                        for a in 0..3 {
                            for (d, q) in even[a].iter_mut().zip(&e) {
                                *d += area * w * bary[a] * q;
                            }
                        }
                        for (d, q) in odd.iter_mut().zip(&o) {
                            *d += area * w * q;
                        }
                    }
                    (even, odd)
                })
                .collect();
            for (c, (even, odd)) in per_cell.into_iter().enumerate() {
                let t = mesh.triangles[c];
                for a in 0..3 {
                    for (d, q) in load.even[t[a] * ne..(t[a] + 1) * ne].iter_mut().zip(&even[a]) {
                        *d += q;
                    }
                }
                load.odd[c * no..(c + 1) * no].copy_from_slice(&odd);
            }
        }
    }
    load
}

/// `(1/Δε) ⟨S ψ, v⟩` with `S` constant per cell.
pub fn energy_load(mesh: &Mesh2D, previous: &PhaseSpaceField, stopping: &[f64], step: f64) -> PhaseSpaceField {
    let (ne, no) = (previous.n_even, previous.n_odd);
    let mut load = PhaseSpaceField::zeros(mesh.n_nodes(), mesh.n_cells(), ne, no);
    for (c, t) in mesh.triangles.iter().enumerate() {
        let scale = stopping[c] / step;
        let me = p1_element_mass(mesh.areas[c] * scale);
        for a in 0..3 {
            for b in 0..3 {
                let src = previous.even_at(t[b]);
                let dst = &mut load.even[t[a] * ne..(t[a] + 1) * ne];
                for (d, v) in dst.iter_mut().zip(src) {
                    *d += me[a][b] * v;
                }
            }
        }
        let f = mesh.areas[c] * scale;
        for (d, v) in load.odd[c * no..(c + 1) * no].iter_mut().zip(previous.odd_at(c)) {
            *d = f * v;
        }
    }
    load
}

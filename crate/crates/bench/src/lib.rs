//! Shared fixtures for the benchmarks.

use pnfem::harmonics::{AngularOperators, SphericalBasis};
use pnfem::mesh::{Mesh2D, Rect};
use pnfem::mms::{CasePreset, ManufacturedCase, ENERGY_MIN};
use pnfem::model::CellCoefficients;

/// Mesh, operators and coefficients of preset 1 at one energy node.
pub struct Fixture {
    pub mesh: Mesh2D,
    pub ops: AngularOperators,
    pub coeffs: CellCoefficients,
    pub case: ManufacturedCase,
}

impl Fixture {
    pub fn new(inv_h: usize, order: i64) -> Self {
        let (case, _) = ManufacturedCase::preset(CasePreset::Spatial);
        let mesh = Mesh2D::rectangle(inv_h, inv_h, Rect::default()).expect("valid mesh");
        let basis = SphericalBasis::new(order).expect("odd order");
        let ops = AngularOperators::new(&basis).expect("operators");
        let coeffs = CellCoefficients::sample(&case.coefficients, &mesh, ENERGY_MIN).expect("positive coefficients");
        Self { mesh, ops, coeffs, case }
    }
}

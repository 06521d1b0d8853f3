use nalgebra::DMatrix;
use proptest::prelude::*;

use pnfem::analysis::{eoc, eoc_with_ratio, ErrorNorms, StepErrors};
use pnfem::config::{parse_config, StudyConfig, Sweep, SweepAxis};
use pnfem::harmonics::{real_harmonic, AngularOperators, SphericalBasis};
use pnfem::mesh::{Mesh2D, Rect};
use pnfem::mms::{profile_chi, CasePreset, ManufacturedCase};
use pnfem::model::{CellCoefficients, SourceSampling};
use pnfem::system::{
    read_checkpoint, CheckpointFormat, CheckpointWriter, PhaseSpaceField, SolverKind, SourceProjection, StepSystem,
};

fn coefficients(n: usize, values: &[f64]) -> CellCoefficients {
    let pick = |k: usize| -> Vec<f64> { (0..n).map(|c| values[(k * n + c) % values.len()]).collect() };
    CellCoefficients {
        energy: 1.0,
        stopping: pick(0).iter().map(|v| 0.1 + v.abs()).collect(),
        transport: pick(1).iter().map(|v| 0.1 + v.abs()).collect(),
        field: [pick(2), pick(3), pick(4)],
    }
}

fn dense(mesh: &Mesh2D, ops: &AngularOperators, coeffs: &CellCoefficients, step: f64) -> DMatrix<f64> {
    StepSystem::new(mesh, ops, coeffs, step).unwrap().to_dense()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Streaming and Lorentz parts are skew: the symmetric part of the step
    /// matrix is the operator without them.
    #[test]
    fn symmetric_part_drops_skew_terms(
        values in prop::collection::vec(-2.0f64..2.0, 40),
        order in prop::sample::select(vec![1i64, 3]),
        step in 0.01f64..1.0,
        nx in 1usize..3,
    ) {
        let mesh = Mesh2D::rectangle(nx, 2, Rect::new(-1.0, 0.5, 0.0, 1.0)).unwrap();
        let basis = SphericalBasis::new(order).unwrap();
        let ops = AngularOperators::new(&basis).unwrap();
        let coeffs = coefficients(mesh.n_cells(), &values);
        let k = dense(&mesh, &ops, &coeffs, step);
        let mut plain_ops = ops.clone();
        for a in plain_ops.streaming.iter_mut() {
            a.fill(0.0);
        }
        let mut plain = coeffs.clone();
        for f in plain.field.iter_mut() {
            f.fill(0.0);
        }
        let sym = dense(&mesh, &plain_ops, &plain, step);
        prop_assert!(((&k + k.transpose()) * 0.5 - &sym).abs().max() < 1e-12);
        prop_assert!((&sym - sym.transpose()).abs().max() < 1e-12);
    }

    #[test]
    fn step_operator_is_coercive(
        values in prop::collection::vec(-2.0f64..2.0, 40),
        u in prop::collection::vec(-1.0f64..1.0, 4 * 6 + 2 * 10),
        step in 0.01f64..1.0,
    ) {
        prop_assume!(u.iter().any(|v| v.abs() > 1e-3));
        let mesh = Mesh2D::rectangle(1, 1, Rect::default()).unwrap();
        let basis = SphericalBasis::new(3).unwrap();
        let ops = AngularOperators::new(&basis).unwrap();
        let coeffs = coefficients(2, &values);
        let sys = StepSystem::new(&mesh, &ops, &coeffs, step).unwrap();
        let field = sys.zero_field().from_vec(&u);
        let ku = sys.apply(&field).to_vec();
        let energy: f64 = u.iter().zip(&ku).map(|(a, b)| a * b).sum();
        let mass = coeffs.stopping.iter().fold(f64::INFINITY, |m, &v| m.min(v)) / step;
        // b(u,u) ≥ (min S / Δε) ‖u‖²; the smallest P1 mass eigenvalue on this mesh is area/12 · 1/2
        let lower = mass * u.iter().map(|v| v * v).sum::<f64>() * mesh.areas[0] / 24.0;
        prop_assert!(energy > 0.0);
        prop_assert!(energy >= lower * (1.0 - 1e-12), "{} < {}", energy, lower);
    }

    #[test]
    fn lorentz_matrices_are_skew(order in prop::sample::select(vec![1i64, 3, 5, 7, 9])) {
        let ops = AngularOperators::new(&SphericalBasis::new(order).unwrap()).unwrap();
        for r in ops.lorentz_even.iter().chain(&ops.lorentz_odd) {
            prop_assert!((r + r.transpose()).abs().max() < 1e-12);
        }
    }
}

proptest! {
    #[test]
    fn eoc_depends_only_on_the_ratio(a in 1e-8f64..1.0, b in 1e-8f64..1.0, scale in 1e-6f64..1e6, ratio in 1.1f64..8.0) {
        let base = eoc_with_ratio(a, b, ratio).unwrap();
        prop_assert!((eoc_with_ratio(a * scale, b * scale, ratio).unwrap() - base).abs() < 1e-9 * base.abs().max(1.0));
        prop_assert!((eoc(4.0 * a, a).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn norms_are_nonnegative_and_energy_dominates(
        steps in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0, 0.0f64..1.0), 1..20)
    ) {
        let list: Vec<StepErrors> = steps.iter().map(|&(even, odd, streaming)| StepErrors { even, odd, streaming }).collect();
        let n = ErrorNorms::from_steps(&list);
        prop_assert!(n.even >= 0.0 && n.odd >= 0.0);
        prop_assert!(n.energy >= n.even);
    }

    #[test]
    fn config_round_trips(
        preset in prop::sample::select(vec![CasePreset::Spatial, CasePreset::Angular, CasePreset::Energy, CasePreset::EnergyScaled]),
        custom in any::<bool>(),
        axis in prop::sample::select(vec![SweepAxis::H, SweepAxis::Order, SweepAxis::Energy]),
        count in 1usize..5,
        order in 0i64..5,
        inv_h in 1usize..200,
        step_pow in 1u32..8,
        kind in prop::sample::select(vec![SolverKind::Schur, SolverKind::Banded]),
        points in prop::option::of(1usize..6),
        degree in prop::option::of(1usize..10),
        threads in prop::option::of(1usize..16),
        rtol in 1e-14f64..1e-4,
    ) {
        let mut cfg = StudyConfig::from_preset(preset);
        if custom {
            cfg.case = Some(ManufacturedCase::preset(preset).0);
            cfg.preset = None;
        }
        let values = match axis {
            SweepAxis::Order => (0..count).map(|k| 2 * k + 1).collect(),
            _ => (0..count).map(|k| 2usize.pow(k as u32 + 1)).collect(),
        };
        cfg.sweep = Sweep { axis, values };
        cfg.order = 2 * order + 1;
        cfg.inv_h = inv_h;
        cfg.energy_step = 0.5f64.powi(step_pow as i32);
        cfg.solver.kind = kind;
        cfg.solver.rtol = rtol;
        cfg.threads = threads;
        if let Some(points) = points {
            cfg.source.sampling = SourceSampling::Average { points };
        }
        if let Some(degree) = degree {
            cfg.source.projection = SourceProjection::ElementQuadrature { degree };
        } else {
            cfg.source.projection = SourceProjection::Interpolation;
        }
        cfg.validate().unwrap();
        prop_assert_eq!(parse_config(&cfg.render().unwrap()).unwrap(), cfg);
    }

    #[test]
    fn exact_solution_parity(x in -1.0f64..1.0, y in -1.0f64..1.0, e in 1.0f64..2.0, z in -1.0f64..1.0, phi in 0.0f64..6.28) {
        let r = (1.0 - z * z).sqrt();
        let s = [r * phi.cos(), r * phi.sin(), z];
        let minus = [-s[0], -s[1], -s[2]];
        for p in [CasePreset::Spatial, CasePreset::Angular] {
            let (case, _) = ManufacturedCase::preset(p);
            let even = 0.5 * (case.exact_solution(x, y, s, e) + case.exact_solution(x, y, minus, e));
            let want: f64 = (0..=case.max_degree)
                .step_by(2)
                .map(|l| ManufacturedCase::weight(l) * real_harmonic(l as i64, 0, s).unwrap())
                .sum::<f64>()
                * profile_chi(x, y)
                * case.profile.eval(e);
            prop_assert!((even - want).abs() < 1e-12);
        }
    }

    #[test]
    fn fields_survive_checkpoints(
        values in prop::collection::vec(-1e3f64..1e3, 3 * 6 + 2 * 10),
        binary in any::<bool>(),
        index in 0usize..1000,
        energy in 1.0f64..2.0,
    ) {
        let (even, odd) = values.split_at(3 * 6);
        let field = PhaseSpaceField::from_parts(6, 10, even.to_vec(), odd.to_vec()).unwrap();
        prop_assert_eq!(field.from_vec(&field.to_vec()), field.clone());
        let format = if binary { CheckpointFormat::Binary } else { CheckpointFormat::Csv };
        let mut w = CheckpointWriter::new(Vec::new(), format).unwrap();
        w.write(index, energy, &field).unwrap();
        let bytes = w.finish().unwrap();
        let back = read_checkpoint(&bytes[..], format).unwrap();
        prop_assert_eq!(back.len(), 1);
        prop_assert_eq!(back[0].index, index);
        prop_assert_eq!(back[0].energy, energy);
        prop_assert_eq!(&back[0].field, &field);
    }
}

use super::assembly::StepSystem;
use super::field::PhaseSpaceField;
use super::rhs::{energy_load, source_load, SourceProjection};
use super::solve::{SolverOptions, StepFactorization};
use crate::error::{Error, Result};
use crate::harmonics::AngularOperators;
use crate::mesh::Mesh2D;
use crate::model::{
    sampled_source, CellCoefficients, EnergyGrid, ModelCoefficients, SourceSampling, SourceTerm,
};

/// Everything needed to march from `ε_max` down to `ε_min`.
#[derive(Clone, Copy)]
pub struct TransportProblem<'a> {
    pub mesh: &'a Mesh2D,
    pub ops: &'a AngularOperators,
    pub coefficients: &'a ModelCoefficients,
    pub grid: EnergyGrid,
    pub source: &'a dyn SourceTerm,
    pub projection: SourceProjection,
    pub solver: SolverOptions,
    pub sampling: SourceSampling,
}

impl<'a> TransportProblem<'a> {
    pub fn new(
        mesh: &'a Mesh2D,
        ops: &'a AngularOperators,
        coefficients: &'a ModelCoefficients,
        grid: EnergyGrid,
        source: &'a dyn SourceTerm,
    ) -> Self {
        Self {
            mesh,
            ops,
            coefficients,
            grid,
            source,
            projection: SourceProjection::default(),
            solver: SolverOptions::default(),
            sampling: SourceSampling::default(),
        }
    }
}

/// Solver statistics of one energy step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub index: usize,
    pub energy: f64,
    pub iterations: usize,
    pub residual: f64,
    /// The factorization of the previous step was reused.
    pub reused: bool,
}

/// State handed to the observer after each step.
pub struct StepView<'s> {
    pub index: usize,
    pub energy: f64,
    pub field: &'s PhaseSpaceField,
    pub coefficients: &'s CellCoefficients,
}

fn same_operator(a: &CellCoefficients, b: &CellCoefficients) -> bool {
    a.stopping == b.stopping && a.transport == b.transport && a.field == b.field
}

/// Backward energy stepping `m = M-1, ..., 0` from `ψ^M = 0`.
///
/// The observer sees `m = M` first (the zero terminal state), then every
/// computed step in decreasing order. Failures are tagged with the step index.
pub fn run_transport<F>(problem: &TransportProblem, mut observe: F) -> Result<Vec<StepRecord>>
where
    F: FnMut(StepView<'_>) -> Result<()>,
{
    let TransportProblem {
        mesh,
        ops,
        coefficients,
        grid,
        source,
        projection,
        solver,
        sampling,
    } = *problem;
    let tag = |step: usize| move |e: Error| Error::Step { step, source: Box::new(e) };
    let basis = &ops.basis;
    let projector = source.projector(basis);
    let step = grid.step();

    let top = grid.steps;
    let mut upper = CellCoefficients::sample(coefficients, mesh, grid.node(top)).map_err(tag(top))?;
    let mut field = PhaseSpaceField::zeros(mesh.n_nodes(), mesh.n_cells(), basis.n_even(), basis.n_odd());
    observe(StepView {
        index: top,
        energy: grid.node(top),
        field: &field,
        coefficients: &upper,
    })
    .map_err(tag(top))?;

    let mut cache: Option<(CellCoefficients, StepFactorization)> = None;
    let mut records = Vec::with_capacity(grid.steps);
    for m in (0..grid.steps).rev() {
        let mut run = || -> Result<(CellCoefficients, PhaseSpaceField, StepRecord)> {
            let coeffs = CellCoefficients::sample(coefficients, mesh, grid.node(m))?;
            let sys = StepSystem::new(mesh, ops, &coeffs, step)?;
            let reused = matches!(&cache, Some((c, _)) if same_operator(c, &coeffs));
            if !reused {
                cache = Some((coeffs.clone(), StepFactorization::new(&sys, solver.kind)?));
            }
            let averaged = sampled_source(source, m, &grid, sampling)?;
            let mut rhs = source_load(mesh, basis, &averaged, projector.as_ref(), projection);
            let inertia = energy_load(mesh, &field, &upper.stopping, step);
            for (r, v) in rhs.even.iter_mut().zip(&inertia.even) {
                *r += v;
            }
            for (r, v) in rhs.odd.iter_mut().zip(&inertia.odd) {
                *r += v;
            }
            let (_, fact) = cache.as_ref().expect("factorization cached");
            let sol = fact.solve(&sys, &rhs, Some(&field), &solver.krylov)?;
            let record = StepRecord {
                index: m,
                energy: grid.node(m),
                iterations: sol.stats.iterations,
                residual: sol.stats.relative_residual,
                reused,
            };
            Ok((coeffs, sol.field, record))
        };
        let (coeffs, next, record) = run().map_err(tag(m))?;
        field = next;
        upper = coeffs;
        observe(StepView {
            index: m,
            energy: grid.node(m),
            field: &field,
            coefficients: &upper,
        })
        .map_err(tag(m))?;
        records.push(record);
    }
    Ok(records)
}

/// Runs the full march and keeps every state, indexed by `m`.
pub fn solve_trajectory(problem: &TransportProblem) -> Result<Vec<PhaseSpaceField>> {
    let mut states = vec![None; problem.grid.steps + 1];
    run_transport(problem, |v| {
        states[v.index] = Some(v.field.clone());
        Ok(())
    })?;
    Ok(states.into_iter().map(|s| s.expect("every step visited")).collect())
}

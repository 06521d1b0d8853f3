//! Convergence studies: one transport solve per sweep value, with error
//! norms and observed orders between consecutive runs.

use std::fmt::Write as _;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::Serialize;

use crate::analysis::{eoc_with_ratio, ErrorEvaluator, ErrorNorms};
use crate::config::{SolverConfig, SourceConfig, StudyConfig, SweepAxis};
use crate::error::{Error, Result};
use crate::mms::ManufacturedCase;
use crate::harmonics::{AngularOperators, SphericalBasis};
use crate::mesh::Mesh2D;
use crate::mms::Discretization;
use crate::model::EnergyGrid;
use crate::system::{run_transport, StepView, TransportProblem};

/// Outcome of one run of a study.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyRow {
    /// Value of the swept knob.
    pub knob: usize,
    pub discretization: Discretization,
    pub errors: ErrorNorms,
    pub steps: usize,
    pub iterations: usize,
    pub max_residual: f64,
    pub seconds: f64,
}

/// Observed orders between a row and its predecessor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RowOrders {
    pub even: f64,
    pub odd: f64,
    pub energy: f64,
}

/// A run that did not complete; later runs are skipped.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunFailure {
    pub knob: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyReport {
    pub case: String,
    pub axis: SweepAxis,
    pub rows: Vec<StudyRow>,
    pub failure: Option<RunFailure>,
    /// Seconds since the Unix epoch.
    pub started: u64,
    pub finished: u64,
}

#[derive(Serialize)]
struct Metadata<'a> {
    case: &'a str,
    axis: SweepAxis,
    started_unix: u64,
    finished_unix: u64,
    status: &'static str,
    solver: SolverConfig,
    source: SourceConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    failure: Option<&'a RunFailure>,
    runs: &'a [StudyRow],
}

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

/// Runs the study, calling `on_step(run, view)` after every energy step.
pub fn run_study_with<F>(config: &StudyConfig, mut on_step: F) -> Result<StudyReport>
where
    F: FnMut(usize, &StepView<'_>) -> Result<()>,
{
    config.validate()?;
    let case = config.case();
    let started = unix_now();
    let mut rows = Vec::with_capacity(config.sweep.values.len());
    let mut failure = None;
    for (run, &knob) in config.sweep.values.iter().enumerate() {
        match run_one(config, &case, run, &mut on_step) {
            Ok(row) => rows.push(row),
            Err(e) => {
                failure = Some(RunFailure {
                    knob,
                    message: e.to_string(),
                });
                break;
            }
        }
    }
    Ok(StudyReport {
        case: config.case_label(),
        axis: config.sweep.axis,
        rows,
        failure,
        started,
        finished: unix_now(),
    })
}

fn run_one<F>(config: &StudyConfig, case: &ManufacturedCase, run: usize, on_step: &mut F) -> Result<StudyRow>
where
    F: FnMut(usize, &StepView<'_>) -> Result<()>,
{
    let knob = config.sweep.values[run];
    let d = config.run(run);
    let clock = Instant::now();
    let mesh = Mesh2D::rectangle(d.inv_h, d.inv_h, config.domain)?;
    let basis = SphericalBasis::new(d.order)?;
    let ops = AngularOperators::new(&basis)?;
    let grid = EnergyGrid::with_step(config.energy.min, config.energy.max, d.energy_step)?;
    let mut problem = TransportProblem::new(&mesh, &ops, &case.coefficients, grid, case);
    problem.projection = config.source.projection;
    problem.sampling = config.source.sampling;
    problem.solver = config.solver.options();
    let evaluator = ErrorEvaluator::new(case, &mesh, &basis)?;
    let mut steps = Vec::with_capacity(grid.steps + 1);
    let records = run_transport(&problem, |view| {
        evaluator.observe(&view, &mut steps);
        on_step(run, &view)
    })?;
    Ok(StudyRow {
        knob,
        discretization: d,
        errors: ErrorNorms::from_steps(&steps),
        steps: records.len(),
        iterations: records.iter().map(|r| r.iterations).sum(),
        max_residual: records.iter().map(|r| r.residual).fold(0.0, f64::max),
        seconds: clock.elapsed().as_secs_f64(),
    })
}

pub fn run_study(config: &StudyConfig) -> Result<StudyReport> {
    run_study_with(config, |_, _| Ok(()))
}

/// Three significant digits with a two-digit signed exponent, e.g. `9.00e-02`.
pub fn format_error(v: f64) -> String {
    let s = format!("{v:.2e}");
    match s.split_once('e') {
        Some((mantissa, exp)) => {
            let (sign, digits) = exp.strip_prefix('-').map_or(("+", exp), |d| ("-", d));
            format!("{mantissa}e{sign}{digits:0>2}")
        }
        None => s,
    }
}

impl StudyReport {
    /// Orders for each row after the first.
    pub fn orders(&self) -> Vec<Option<RowOrders>> {
        let mut out = vec![None];
        for pair in self.rows.windows(2) {
            let ratio = pair[1].knob as f64 / pair[0].knob as f64;
            let eoc = |a: f64, b: f64| eoc_with_ratio(a, b, ratio).unwrap_or(f64::NAN);
            let (c, f) = (&pair[0].errors, &pair[1].errors);
            out.push(Some(RowOrders {
                even: eoc(c.even, f.even),
                odd: eoc(c.odd, f.odd),
                energy: eoc(c.energy, f.energy),
            }));
        }
        out.truncate(self.rows.len());
        out
    }

    fn has_orders(&self) -> bool {
        self.rows.len() > 1
    }

    /// Machine-readable table. Contains nothing run-dependent beyond the
    /// numbers themselves, so deterministic runs give identical bytes.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        let knob = match self.axis {
            SweepAxis::H => "inv_h",
            SweepAxis::Order => "order",
            SweepAxis::Energy => "inv_energy_step",
        };
        if self.has_orders() {
            writeln!(s, "{knob},e_even,eoc_even,e_odd,eoc_odd,e_energy,eoc_energy").unwrap();
        } else {
            writeln!(s, "{knob},e_even,e_odd,e_energy").unwrap();
        }
        for (row, orders) in self.rows.iter().zip(self.orders()) {
            let e = &row.errors;
            if !self.has_orders() {
                writeln!(s, "{},{:e},{:e},{:e}", row.knob, e.even, e.odd, e.energy).unwrap();
                continue;
            }
            let o = |f: fn(&RowOrders) -> f64| orders.as_ref().map(|r| format!("{:e}", f(r))).unwrap_or_default();
            writeln!(
                s,
                "{},{:e},{},{:e},{},{:e},{}",
                row.knob,
                e.even,
                o(|r| r.even),
                e.odd,
                o(|r| r.odd),
                e.energy,
                o(|r| r.energy)
            )
            .unwrap();
        }
        if let Some(f) = &self.failure {
            writeln!(s, "# run {} failed: {}", f.knob, f.message).unwrap();
        }
        s
    }

    /// Human-readable table: errors to three significant digits, orders to two decimals.
    pub fn to_markdown(&self) -> String {
        let mut s = String::new();
        let label = self.axis.label();
        if self.has_orders() {
            writeln!(s, "| {label} | e⁺ | eoc | e⁻ | eoc | E⁺ | eoc |").unwrap();
            writeln!(s, "|---:|---:|---:|---:|---:|---:|---:|").unwrap();
        } else {
            writeln!(s, "| {label} | e⁺ | e⁻ | E⁺ |").unwrap();
            writeln!(s, "|---:|---:|---:|---:|").unwrap();
        }
        for (row, orders) in self.rows.iter().zip(self.orders()) {
            let e = &row.errors;
            let (ep, em, en) = (format_error(e.even), format_error(e.odd), format_error(e.energy));
            if !self.has_orders() {
                writeln!(s, "| {} | {ep} | {em} | {en} |", row.knob).unwrap();
                continue;
            }
            let o = |f: fn(&RowOrders) -> f64| orders.as_ref().map_or("–".to_string(), |r| format!("{:.2}", f(r)));
            writeln!(
                s,
                "| {} | {ep} | {} | {em} | {} | {en} | {} |",
                row.knob,
                o(|r| r.even),
                o(|r| r.odd),
                o(|r| r.energy)
            )
            .unwrap();
        }
        if let Some(f) = &self.failure {
            writeln!(s, "\n**{} = {} failed:** {}", label, f.knob, f.message).unwrap();
        }
        s
    }

    pub fn succeeded(&self) -> bool {
        self.failure.is_none()
    }

    /// Timestamps, solver settings and per-run statistics as TOML.
    pub fn metadata(&self, config: &StudyConfig) -> Result<String> {
        let meta = Metadata {
            case: &self.case,
            axis: self.axis,
            started_unix: self.started,
            finished_unix: self.finished,
            status: if self.succeeded() { "ok" } else { "failed" },
            solver: config.solver,
            source: config.source,
            failure: self.failure.as_ref(),
            runs: &self.rows,
        };
        toml::to_string(&meta).map_err(|e| Error::Config(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(knob: usize, even: f64) -> StudyRow {
        StudyRow {
            knob,
            discretization: Discretization {
                order: 1,
                inv_h: knob,
                energy_step: 0.5,
            },
            errors: ErrorNorms {
                even,
                odd: 2.0 * even,
                energy: 4.0 * even,
            },
            steps: 2,
            iterations: 3,
            max_residual: 0.0,
            seconds: 0.0,
        }
    }

    #[test]
    fn formats_errors_like_tables() {
        assert_eq!(format_error(0.09), "9.00e-02");
        assert_eq!(format_error(0.004333), "4.33e-03");
        assert_eq!(format_error(1.23), "1.23e+00");
        assert_eq!(format_error(12345.0), "1.23e+04");
    }

    #[test]
    fn orders_and_tables() {
        let report = StudyReport {
            case: "custom".into(),
            axis: SweepAxis::H,
            rows: vec![row(8, 0.16), row(16, 0.04)],
            failure: None,
            started: 0,
            finished: 0,
        };
        let orders = report.orders();
        assert!(orders[0].is_none());
        assert!((orders[1].unwrap().even - 2.0).abs() < 1e-12);
        let csv = report.to_csv();
        assert!(csv.starts_with("inv_h,e_even,eoc_even"));
        assert_eq!(csv.lines().nth(1).unwrap(), "8,1.6e-1,,3.2e-1,,6.4e-1,");
        let md = report.to_markdown();
        assert!(md.contains("| 16 | 4.00e-02 | 2.00 |"), "{md}");

        let single = StudyReport {
            rows: vec![row(8, 0.16)],
            ..report
        };
        assert!(!single.to_csv().contains("eoc"));
        assert!(!single.to_markdown().contains("eoc"));

        let failed = StudyReport {
            failure: Some(RunFailure {
                knob: 16,
                message: "energy step 3: diverged".into(),
            }),
            ..single
        };
        assert!(failed.to_csv().ends_with("# run 16 failed: energy step 3: diverged\n"));
        assert!(failed.to_markdown().contains("failed:** energy step 3"));
        let cfg = StudyConfig::from_preset(crate::mms::CasePreset::Spatial);
        let meta = failed.metadata(&cfg).unwrap();
        assert!(meta.contains("status = \"failed\""), "{meta}");
        assert!(meta.contains("[[runs]]"), "{meta}");
    }
}

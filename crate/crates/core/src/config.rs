//! Declarative study definition, read from TOML.
//!
//! A study fixes a manufactured case (a preset id or a custom `[case]`
//! table), a sweep over one discretization knob, and the fixed values of the
//! other knobs. Omitted fields take the preset's defaults.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::KrylovOptions;
use crate::mesh::Rect;
use crate::mms::{CasePreset, ManufacturedCase, ENERGY_MAX, ENERGY_MIN};
use crate::model::{EnergyGrid, SourceSampling};
use crate::system::{CheckpointFormat, SolverKind, SolverOptions, SourceProjection};

/// Knob varied along a study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepAxis {
    /// Values are `1/h`, the number of cells per side.
    H,
    /// Values are the expansion order `N`.
    Order,
    /// Values are `1/Δε`.
    Energy,
}

impl SweepAxis {
    pub fn label(self) -> &'static str {
        match self {
            Self::H => "1/h",
            Self::Order => "N",
            Self::Energy => "1/Δε",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub axis: SweepAxis,
    pub values: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnergyRange {
    pub min: f64,
    pub max: f64,
}

impl Default for EnergyRange {
    fn default() -> Self {
        Self {
            min: ENERGY_MIN,
            max: ENERGY_MAX,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub kind: SolverKind,
    pub rtol: f64,
    pub max_iterations: usize,
    pub restart: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let k = KrylovOptions::default();
        Self {
            kind: SolverKind::default(),
            rtol: k.rtol,
            max_iterations: k.max_iterations,
            restart: k.restart,
        }
    }
}

impl SolverConfig {
    pub fn options(&self) -> SolverOptions {
        SolverOptions {
            kind: self.kind,
            krylov: KrylovOptions {
                rtol: self.rtol,
                max_iterations: self.max_iterations,
                restart: self.restart,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceConfig {
    pub sampling: SourceSampling,
    pub projection: SourceProjection,
}

impl Default for SourceConfig {
    /// Settings used by the manufactured presets.
    fn default() -> Self {
        Self {
            sampling: SourceSampling::Node,
            projection: SourceProjection::ElementQuadrature { degree: 6 },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    #[default]
    Csv,
    Md,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub format: ReportFormat,
    /// Write every trajectory in this format when set.
    pub checkpoint: Option<CheckpointFormat>,
}

/// Fully resolved study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<CasePreset>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub case: Option<ManufacturedCase>,
    pub order: i64,
    pub inv_h: usize,
    pub energy_step: f64,
    pub deterministic: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    pub sweep: Sweep,
    pub energy: EnergyRange,
    pub domain: Rect,
    pub solver: SolverConfig,
    pub source: SourceConfig,
    pub output: OutputConfig,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    axis: Option<SweepAxis>,
    values: Option<Vec<usize>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    preset: Option<CasePreset>,
    case: Option<ManufacturedCase>,
    order: Option<i64>,
    inv_h: Option<usize>,
    energy_step: Option<f64>,
    deterministic: Option<bool>,
    threads: Option<usize>,
    sweep: Option<RawSweep>,
    energy: Option<EnergyRange>,
    domain: Option<Rect>,
    solver: Option<SolverConfig>,
    source: Option<SourceConfig>,
    output: Option<OutputConfig>,
}

/// Default sweep of a preset.
pub fn preset_sweep(p: CasePreset) -> Sweep {
    match p {
        CasePreset::Spatial => Sweep {
            axis: SweepAxis::H,
            values: vec![8, 16, 32],
        },
        CasePreset::Angular => Sweep {
            axis: SweepAxis::Order,
            values: vec![1, 3, 5],
        },
        CasePreset::Energy | CasePreset::EnergyScaled => Sweep {
            axis: SweepAxis::Energy,
            values: vec![2, 4, 8, 16, 32],
        },
    }
}

impl StudyConfig {
    /// The preset's study with every default filled in.
    pub fn from_preset(p: CasePreset) -> Self {
        let (_, d) = ManufacturedCase::preset(p);
        Self {
            preset: Some(p),
            case: None,
            order: d.order,
            inv_h: d.inv_h,
            energy_step: d.energy_step,
            deterministic: true,
            threads: None,
            sweep: preset_sweep(p),
            energy: EnergyRange::default(),
            domain: Rect::default(),
            solver: SolverConfig::default(),
            source: SourceConfig::default(),
            output: OutputConfig::default(),
        }
    }

    pub fn case(&self) -> ManufacturedCase {
        match (self.case, self.preset) {
            (Some(c), _) => c,
            (None, Some(p)) => ManufacturedCase::preset(p).0,
            (None, None) => unreachable!("validated config has a case"),
        }
    }

    /// Short name for reports.
    pub fn case_label(&self) -> String {
        match (self.case, self.preset) {
            (None, Some(p)) => format!("preset {}", p.id()),
            _ => "custom".to_string(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.case.is_none() && self.preset.is_none() {
            return bad("missing `preset` (or a custom `[case]` table)".into());
        }
        if self.case.is_some() && self.preset.is_some() {
            return bad("`preset` and `[case]` are mutually exclusive".into());
        }
        check_order("order", self.order)?;
        if self.inv_h == 0 {
            return bad("`inv_h` must be positive".into());
        }
        if self.sweep.values.is_empty() {
            return bad("`sweep.values` must not be empty".into());
        }
        if self.sweep.values.windows(2).any(|w| w[0] >= w[1]) {
            return bad("`sweep.values` must be strictly increasing".into());
        }
        for &v in &self.sweep.values {
            match self.sweep.axis {
                SweepAxis::Order => check_order("sweep.values", v as i64)?,
                SweepAxis::H | SweepAxis::Energy if v == 0 => {
                    return bad(format!("`sweep.values` must be positive for axis {:?}", self.sweep.axis));
                }
                _ => {}
            }
        }
        for run in 0..self.sweep.values.len() {
            let d = self.run(run);
            EnergyGrid::with_step(self.energy.min, self.energy.max, d.energy_step)
                .map_err(|e| Error::Config(format!("energy grid: {e}")))?;
        }
        if !(self.solver.rtol > 0.0) || self.solver.max_iterations == 0 || self.solver.restart == 0 {
            return bad("solver needs rtol > 0, max_iterations > 0 and restart > 0".into());
        }
        if let SourceSampling::Average { points: 0 } = self.source.sampling {
            return bad("`source.sampling.points` must be positive".into());
        }
        if self.threads == Some(0) {
            return bad("`threads` must be positive".into());
        }
        if let Some(c) = &self.case {
            if c.profile.eval(self.energy.max).abs() > 1e-12 {
                return bad("custom case profile must vanish at the top of the energy range".into());
            }
        }
        crate::mesh::Mesh2D::rectangle(1, 1, self.domain).map_err(|e| Error::Config(format!("domain: {e}")))?;
        let d = self.domain;
        if [d.x0, d.x1, d.y0, d.y1].iter().any(|v| v.fract() != 0.0) {
            return bad("domain bounds must be integers so the manufactured solution vanishes on the boundary".into());
        }
        Ok(())
    }

    /// Knobs of run `index` along the sweep.
    pub fn run(&self, index: usize) -> crate::mms::Discretization {
        let v = self.sweep.values[index];
        let mut d = crate::mms::Discretization {
            order: self.order,
            inv_h: self.inv_h,
            energy_step: self.energy_step,
        };
        match self.sweep.axis {
            SweepAxis::H => d.inv_h = v,
            SweepAxis::Order => d.order = v as i64,
            SweepAxis::Energy => d.energy_step = (self.energy.max - self.energy.min) / v as f64,
        }
        d
    }

    pub fn render(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }
}

fn check_order(field: &str, n: i64) -> Result<()> {
    if n <= 0 || n % 2 == 0 {
        return Err(Error::Config(format!(
            "`{field}` = {n}: the expansion order must be an odd positive integer"
        )));
    }
    Ok(())
}

/// Parses and validates a study, filling defaults from the preset.
pub fn parse_config(text: &str) -> Result<StudyConfig> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    let mut cfg = match (raw.preset, raw.case) {
        (Some(p), None) => StudyConfig::from_preset(p),
        (None, Some(c)) => {
            let mut base = StudyConfig::from_preset(CasePreset::Spatial);
            base.preset = None;
            base.case = Some(c);
            base
        }
        (Some(_), Some(_)) => return Err(Error::Config("`preset` and `[case]` are mutually exclusive".into())),
        (None, None) => return Err(Error::Config("missing `preset` (or a custom `[case]` table)".into())),
    };
    if let Some(v) = raw.order {
        cfg.order = v;
    }
    if let Some(v) = raw.inv_h {
        cfg.inv_h = v;
    }
    if let Some(v) = raw.energy_step {
        cfg.energy_step = v;
    }
    if let Some(v) = raw.deterministic {
        cfg.deterministic = v;
    }
    cfg.threads = raw.threads;
    if let Some(s) = raw.sweep {
        match (s.axis, s.values) {
            (Some(axis), Some(values)) => cfg.sweep = Sweep { axis, values },
            (Some(axis), None) if axis == cfg.sweep.axis => {}
            (Some(axis), None) => {
                return Err(Error::Config(format!("`sweep.values` required when changing the axis to {axis:?}")))
            }
            (None, Some(values)) => cfg.sweep.values = values,
            (None, None) => {}
        }
    }
    if let Some(v) = raw.energy {
        cfg.energy = v;
    }
    if let Some(v) = raw.domain {
        cfg.domain = v;
    }
    if let Some(v) = raw.solver {
        cfg.solver = v;
    }
    if let Some(v) = raw.source {
        cfg.source = v;
    }
    if let Some(v) = raw.output {
        cfg.output = v;
    }
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_defaults() {
        let c = parse_config("preset = \"1\"").unwrap();
        assert_eq!(c.order, 5);
        assert_eq!(c.energy_step, 1e-2);
        assert_eq!(c.sweep, Sweep { axis: SweepAxis::H, values: vec![8, 16, 32] });
        assert_eq!(c.run(2).inv_h, 32);
        let c = parse_config("preset = \"3\"").unwrap();
        assert_eq!(c.run(0).energy_step, 0.5);
    }

    #[test]
    fn rejects_even_order_and_unknown_keys() {
        let e = parse_config("preset = \"2\"\n[sweep]\nvalues = [1, 2]").unwrap_err();
        assert!(e.to_string().contains("odd positive"), "{e}");
        let e = parse_config("preset = \"1\"\nbogus = 3").unwrap_err();
        assert!(e.to_string().contains("bogus"), "{e}");
        assert!(parse_config("order = 5").unwrap_err().to_string().contains("missing `preset`"));
        assert!(matches!(parse_config("preset = \"9\""), Err(Error::Config(_))));
    }

    #[test]
    fn render_round_trips() {
        let mut c = parse_config("preset = \"2\"\nthreads = 2\n[output]\ncheckpoint = \"binary\"").unwrap();
        c.source.sampling = SourceSampling::Average { points: 3 };
        assert_eq!(parse_config(&c.render().unwrap()).unwrap(), c);
        let custom = StudyConfig {
            preset: None,
            case: Some(ManufacturedCase::preset(CasePreset::Energy).0),
            ..StudyConfig::from_preset(CasePreset::Energy)
        };
        assert_eq!(parse_config(&custom.render().unwrap()).unwrap(), custom);
    }
}

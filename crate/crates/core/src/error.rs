use thiserror::Error;

/// Errors raised while building or running a discretization.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid expansion order {0}: the P_N order must be odd and positive")]
    InvalidOrder(i64),
    #[error("invalid harmonic index (l = {l}, m = {m})")]
    InvalidHarmonic { l: i64, m: i64 },
    #[error("invalid quadrature exactness {0}")]
    InvalidExactness(i64),
    #[error("degenerate mesh: {0}")]
    DegenerateMesh(String),
    #[error("size mismatch in {context}: expected {expected}, found {found}")]
    SizeMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("coefficient {name} = {value} is not positive at cell {cell}, energy {energy}")]
    NonPositiveCoefficient {
        name: &'static str,
        cell: usize,
        energy: f64,
        value: f64,
    },
    #[error("energy step index {index} out of range 0..{steps}")]
    StepOutOfRange { index: usize, steps: usize },
    #[error("invalid energy grid: {0}")]
    InvalidGrid(String),
    #[error("solver did not converge after {iterations} iterations (relative residual {residual:.3e})")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("zero pivot encountered at row {0} in direct factorization")]
    SingularPivot(usize),
    #[error("energy step {step}: {source}")]
    Step {
        step: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("unknown preset {0:?}")]
    UnknownPreset(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("eoc requires positive errors, got {coarse} and {fine}")]
    NonPositiveError { coarse: f64, fine: f64 },
    #[error("malformed checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

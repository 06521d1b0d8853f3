//! Step systems of the implicit energy march and their solution.

mod assembly;
pub mod checkpoint;
mod field;
mod rhs;
mod solve;
mod transport;

pub use assembly::StepSystem;
pub use checkpoint::{read_checkpoint, CheckpointFormat, CheckpointRecord, CheckpointWriter};
pub use field::PhaseSpaceField;
pub use rhs::{energy_load, source_load, SourceProjection};
pub use solve::{SchurFactorization, SolverKind, SolverOptions, StepFactorization, StepSolution};
pub use transport::{run_transport, solve_trajectory, StepRecord, StepView, TransportProblem};

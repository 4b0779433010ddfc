//! Generic hybrid dynamical systems and an event-locating solver.

mod arc;
mod event;
mod integrator;
mod solver;
mod system;

pub use arc::{HybridArc, JumpRecord, Sample};
pub use event::{locate_event, EventError, EventPoint, LinearSegment};
pub use integrator::{DenseOutput, DenseStep, Dopri5, StepOutcome};
pub use solver::{solve, Priority, SolveError, SolverConfig, Stall};
pub use system::{FnSystem, HybridSystem};

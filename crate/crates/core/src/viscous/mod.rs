//! Viscous lake equations with Navier slip and shore drag, discretized on the
//! stream function so every state is exactly divergence-free in the weighted
//! sense.

pub mod audit;
pub mod ops;
pub mod sparse;
pub mod step;

pub use ops::{project_divfree_b, ViscousOps};
pub use step::{run_viscous, viscous_step, StepInfo, ViscousConfig, ViscousState, ViscousTrajectory};

//! Numerical toolkit for lake equations: the degenerate elliptic problem for
//! the stream function, inviscid vorticity transport, and the viscous model
//! with its vanishing-viscosity audit.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod elliptic;
pub mod experiments;
pub mod geometry;
pub mod initial;
pub mod interp;
pub mod transport;
pub mod viscous;

pub use error::{LakeError, Result};
pub use geometry::{
    build_domain, build_grid, weighted_norm, Arm, Bathymetry, DomainConfig, Grid, LakeDomain,
    NodeKind, ScalarField, VectorField, WeightMode,
};
pub use experiments::{compare_fields, fit_rate, viscosity_sweep, RateFit, SweepConfig, SweepReport};
pub use transport::{run_inviscid, InviscidConfig, InviscidTrajectory};
pub use viscous::{run_viscous, ViscousConfig, ViscousOps, ViscousTrajectory};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

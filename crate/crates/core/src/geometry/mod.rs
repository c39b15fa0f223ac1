pub mod domain;
pub mod field;
pub mod grid;
pub mod io;

pub use domain::{Bathymetry, ConformalMap, DomainConfig, LakeDomain, MapSeries};
pub use field::{weighted_norm, ScalarField, VectorField, WeightMode};
pub use grid::{Arm, Grid, NodeKind};

use std::sync::Arc;

use crate::error::Result;

pub fn build_domain(config: &DomainConfig) -> Result<LakeDomain> {
    LakeDomain::build(config)
}

pub fn build_grid(domain: &LakeDomain, n: usize) -> Result<Arc<Grid>> {
    Grid::build(domain, n)
}

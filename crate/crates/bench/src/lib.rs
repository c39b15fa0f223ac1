//! Fixtures shared by the benchmarks.

use std::sync::Arc;

use lakesim_core::initial::Bump;
use lakesim_core::{Grid, LakeDomain, ScalarField};

pub fn disk_grid(alpha: f64, n: usize) -> Arc<Grid> {
    Grid::build(&LakeDomain::disk(alpha, 1.0).expect("disk"), n).expect("grid")
}

/// Grid and radial-bump vorticity.
pub fn radial_setup(alpha: f64, n: usize) -> (Arc<Grid>, ScalarField) {
    let g = disk_grid(alpha, n);
    let w = Bump::radial().sample(&g).expect("bump");
    (g, w)
}

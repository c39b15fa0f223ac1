//! Stream function solves and the velocity `u = (1/b) grad^perp psi`.

use std::sync::Arc;

use serde::Serialize;

use super::operator::{EllipticOperator, SolveStats};
use crate::error::{LakeError, Result};
use crate::geometry::field::{check_same, ScalarField, VectorField};
use crate::geometry::grid::{Arm, Grid, EAST, NORTH, SOUTH, WEST};

pub const MAX_SOLVE_TOL: f64 = 1e-4;
pub const DEFAULT_SOLVE_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct StreamSolution {
    pub psi: ScalarField,
    pub u: VectorField,
    pub f: ScalarField,
    /// Relative residual `||L psi - f|| / ||f||`.
    pub residual: f64,
    /// `||grad psi / sqrt(b)||_{L2}`.
    pub energy: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct StreamSummary {
    pub residual: f64,
    pub energy: f64,
    pub iterations: usize,
    pub sup_psi: f64,
    pub sup_u: f64,
    pub div_residual: f64,
}

impl StreamSolution {
    pub fn summary(&self) -> StreamSummary {
        StreamSummary {
            residual: self.residual,
            energy: self.energy,
            iterations: self.iterations,
            sup_psi: self.psi.max_abs(),
            sup_u: self.u.max_abs(),
            div_residual: div_b_residual(&self.u),
        }
    }
}

/// Reusable solver for one grid.
#[derive(Debug, Clone)]
pub struct StreamSolver {
    op: EllipticOperator,
}

impl StreamSolver {
    pub fn new(grid: &Arc<Grid>) -> Result<Self> {
        Ok(StreamSolver {
            op: EllipticOperator::new(grid)?,
        })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.op.grid()
    }

    pub fn operator(&self) -> &EllipticOperator {
        &self.op
    }

    /// Solves on interior-ordered values.
    pub fn solve_values(
        &self,
        f: &[f64],
        tol: f64,
        guess: Option<&[f64]>,
    ) -> Result<(Vec<f64>, SolveStats)> {
        if !(tol > 0.0 && tol <= MAX_SOLVE_TOL) {
            return Err(LakeError::InvalidConfig(format!(
                "solve tolerance must lie in (0, {MAX_SOLVE_TOL}], got {tol}"
            )));
        }
        if f.iter().any(|v| !v.is_finite()) {
            return Err(LakeError::InvalidInitialData("non-finite source".into()));
        }
        self.op.solve(f, tol, guess)
    }

    pub fn solve(&self, f: &ScalarField, tol: f64) -> Result<StreamSolution> {
        check_same(self.grid(), f.grid())?;
        let grid = self.grid();
        let fv = f.interior_values();
        let (psi_v, stats) = self.solve_values(&fv, tol, None)?;
        let psi = ScalarField::from_interior(grid, "psi", &psi_v).with_time(f.time);
        let u = velocity_from_stream(&psi);
        let energy = self.energy(&psi_v);
        Ok(StreamSolution {
            psi,
            u,
            f: f.clone(),
            residual: stats.relative_residual,
            energy,
            iterations: stats.iterations,
        })
    }

    /// Discrete `||grad psi / sqrt(b)||_{L2}` from the quadratic form of the
    /// operator.
    pub fn energy(&self, psi: &[f64]) -> f64 {
        let mut a = vec![0.0; psi.len()];
        self.op.apply_neg(psi, &mut a);
        let h2 = self.grid().h().powi(2);
        (h2 * super::operator::dot(psi, &a)).max(0.0).sqrt()
    }
}

pub fn solve_stream(grid: &Arc<Grid>, f: &ScalarField, tol: f64) -> Result<StreamSolution> {
    StreamSolver::new(grid)?.solve(f, tol)
}

/// Gradient of a nodal function vanishing on the shore: a three-point
/// (possibly non-uniform) difference along each axis.
pub fn node_gradients(grid: &Grid, psi: &[f64]) -> Vec<[f64; 2]> {
    let h = grid.h();
    let axis = |i: usize, plus: usize, minus: usize| -> f64 {
        let arms = grid.arms(i);
        let (hp, vp) = match arms[plus] {
            Arm::Node(j) => (h, psi[j]),
            Arm::Shore(l) => (l, 0.0),
        };
        let (hm, vm) = match arms[minus] {
            Arm::Node(j) => (h, psi[j]),
            Arm::Shore(l) => (l, 0.0),
        };
        let gp = (vp - psi[i]) / hp;
        let gm = (psi[i] - vm) / hm;
        (hm * gp + hp * gm) / (hp + hm)
    };
    (0..grid.interior_count())
        .map(|i| [axis(i, EAST, WEST), axis(i, NORTH, SOUTH)])
        .collect()
}

/// `u = (1/b)(-d_y psi, d_x psi)` at interior nodes.
pub fn velocity_from_stream(psi: &ScalarField) -> VectorField {
    let grid = psi.grid();
    let g = node_gradients(grid, &psi.interior_values());
    let u: Vec<[f64; 2]> = g
        .iter()
        .enumerate()
        .map(|(i, d)| {
            let b = grid.depth(i);
            [-d[1] / b, d[0] / b]
        })
        .collect();
    let mut out = VectorField::from_interior(grid, "u", &u).with_time(psi.time);
    out.b_divergence_free = true;
    out
}

/// Grid-L2 norm of the centered divergence of `b u`, over nodes whose
/// centered stencil stays two layers away from the shore.
pub fn div_b_residual(u: &VectorField) -> f64 {
    let grid = u.grid();
    let h = grid.h();
    let mut sum = 0.0;
    for i in 0..grid.interior_count() {
        let (ix, iy) = grid.coords(i);
        let deep = (-2..=2).all(|a: i64| {
            (-2..=2).all(|b: i64| a.abs() + b.abs() > 2 || grid.interior_at(ix + a, iy + b).is_some())
        });
        if !deep {
            continue;
        }
        let bu = |dx: i64, dy: i64| {
            let j = grid.interior_at(ix + dx, iy + dy).expect("deep node");
            let v = u.at(j);
            let b = grid.depth(j);
            [b * v[0], b * v[1]]
        };
        let div = (bu(1, 0)[0] - bu(-1, 0)[0] + bu(0, 1)[1] - bu(0, -1)[1]) / (2.0 * h);
        sum += div * div * grid.weight(i);
    }
    sum.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::domain::LakeDomain;

    fn grid(alpha: f64, n: usize) -> Arc<Grid> {
        Grid::build(&LakeDomain::disk(alpha, 1.0).unwrap(), n).unwrap()
    }

    #[test]
    fn zero_source_gives_zero_solution() {
        let g = grid(1.0, 32);
        let s = solve_stream(&g, &ScalarField::zeros(&g, "f"), 1e-10).unwrap();
        assert_eq!(s.psi.max_abs(), 0.0);
        assert_eq!(s.u.max_abs(), 0.0);
        assert_eq!(s.energy, 0.0);
    }

    #[test]
    fn tolerance_outside_range_rejected() {
        let g = grid(0.0, 32);
        let f = ScalarField::from_fn(&g, "f", |_| 1.0);
        assert!(solve_stream(&g, &f, 1e-3).is_err());
        assert!(solve_stream(&g, &f, 0.0).is_err());
    }

    #[test]
    fn residual_meets_tolerance() {
        let g = grid(1.0, 48);
        let f = ScalarField::from_fn(&g, "f", |x| x[0] + 0.5);
        let s = solve_stream(&g, &f, 1e-9).unwrap();
        let solver = StreamSolver::new(&g).unwrap();
        let lpsi = solver.operator().apply(&s.psi.interior_values());
        let r: Vec<f64> = lpsi.iter().zip(f.interior_values()).map(|(a, b)| a - b).collect();
        let rel = crate::geometry::field::grid_l2(&r, &g)
            / crate::geometry::field::grid_l2(&f.interior_values(), &g);
        assert!(rel <= 1e-9, "{rel}");
    }

    #[test]
    fn velocity_of_zero_stream_is_zero() {
        let g = grid(1.0, 32);
        let u = velocity_from_stream(&ScalarField::zeros(&g, "psi"));
        assert_eq!(u.max_abs(), 0.0);
        assert!(u.b_divergence_free);
    }
}

//! Green kernel of the disk, carried to the lake by the conformal map, and
//! the decomposition `G_b(x, y) = G(x, y) sqrt(b(x) b(y)) + S(x, y)`.

use std::f64::consts::PI;
use std::sync::Arc;

use super::stream::StreamSolver;
use crate::error::{LakeError, Result};
use crate::geometry::domain::LakeDomain;
use crate::geometry::field::{check_same, ScalarField};
use crate::geometry::grid::Grid;

pub const COINCIDENT_TOL: f64 = 1e-14;

/// Mean of `ln |z|` over the unit square centred at the origin.
pub const LOG_CELL_MEAN: f64 = 0.5 * (-std::f64::consts::LN_2 - 3.0 + PI / 2.0);

/// Dirichlet Green function of the unit disk,
/// `(1/4pi) ln(|x-y|^2 / (|x-y|^2 + (1-|x|^2)(1-|y|^2)))`.
pub fn green_disk(x: [f64; 2], y: [f64; 2]) -> Result<f64> {
    let dx = x[0] - y[0];
    let dy = x[1] - y[1];
    let d2 = dx * dx + dy * dy;
    if d2.sqrt() < COINCIDENT_TOL {
        return Err(LakeError::CoincidentPoints);
    }
    let qx = 1.0 - (x[0] * x[0] + x[1] * x[1]);
    let qy = 1.0 - (y[0] * y[0] + y[1] * y[1]);
    // the product is commutative in floating point, so the kernel is exactly symmetric
    Ok((d2 / (d2 + qx * qy)).ln() / (4.0 * PI))
}

/// Green function of the lake for the plain Laplacian.
pub fn green_domain(domain: &LakeDomain, x: [f64; 2], y: [f64; 2]) -> Result<f64> {
    let dx = x[0] - y[0];
    let dy = x[1] - y[1];
    if dx.hypot(dy) < COINCIDENT_TOL {
        return Err(LakeError::CoincidentPoints);
    }
    green_disk(domain.to_disk(x), domain.to_disk(y))
}

/// Average of `G(x, .)` over the grid cell of side `h` centred at `x`.
pub fn green_cell_average(domain: &LakeDomain, x: [f64; 2], h: f64) -> f64 {
    let z = domain.to_disk(x);
    let q = 1.0 - (z[0] * z[0] + z[1] * z[1]);
    ((h).ln() + LOG_CELL_MEAN + domain.map_stretch(x).ln()) / (2.0 * PI) - q.ln() / (2.0 * PI)
}

/// Kernel value between interior nodes `i` (target) and `j` (source), with
/// the cell average on the diagonal.
fn node_kernel(grid: &Grid, i: usize, j: usize) -> f64 {
    let x = grid.node_pos(i);
    if i == j {
        green_cell_average(grid.domain(), x, grid.h())
    } else {
        green_domain(grid.domain(), x, grid.node_pos(j)).expect("distinct nodes")
    }
}

#[derive(Debug, Clone)]
pub struct GreenRemainder {
    pub y: [f64; 2],
    pub s_field: ScalarField,
    /// `||b^{-1/2} grad_x S(., y)||_{L2}`.
    pub grad_norm: f64,
}

/// Solves `div_x((1/b) grad_x S) = G(x, y) sqrt(b(y)) Laplacian(1/sqrt(b))(x)`.
pub fn solve_green_remainder(
    solver: &StreamSolver,
    y: [f64; 2],
    delta: f64,
    tol: f64,
) -> Result<GreenRemainder> {
    let grid = solver.grid();
    let domain = grid.domain();
    let distance = if domain.contains(y) {
        domain.boundary_distance(y)
    } else {
        0.0
    };
    if !(distance >= delta) || !(delta > 0.0) {
        return Err(LakeError::SourceTooCloseToBoundary { distance, delta });
    }
    let sqrt_by = domain.depth(y).sqrt();
    let rhs: Vec<f64> = (0..grid.interior_count())
        .map(|i| {
            let x = grid.node_pos(i);
            let lap = domain.laplacian_inv_sqrt_depth(x);
            if lap == 0.0 {
                return 0.0;
            }
            let g = green_domain(domain, x, y)
                .unwrap_or_else(|_| green_cell_average(domain, x, grid.h()));
            g * sqrt_by * lap
        })
        .collect();
    let (s, _) = solver.solve_values(&rhs, tol, None)?;
    let grad_norm = solver.energy(&s);
    Ok(GreenRemainder {
        y,
        s_field: ScalarField::from_interior(grid, "S", &s),
        grad_norm,
    })
}

/// Builds `psi(x) = sum_y [G(x,y) sqrt(b(x) b(y)) + S(x,y)] f(y) w_y` for a
/// source supported at least `delta` from the shore.
///
/// The remainder enters linearly in `y`, so its contribution is obtained
/// from one solve with the quadrature-weighted right-hand sides summed.
pub fn assemble_green_solution(
    solver: &StreamSolver,
    f: &ScalarField,
    delta: f64,
    tol: f64,
) -> Result<ScalarField> {
    let grid: &Arc<Grid> = solver.grid();
    check_same(grid, f.grid())?;
    let support: Vec<usize> = (0..grid.interior_count()).filter(|&i| f.at(i) != 0.0).collect();
    if let Some(min) = support
        .iter()
        .map(|&i| grid.boundary_distance(i))
        .min_by(|a, b| a.total_cmp(b))
    {
        if min < delta {
            return Err(LakeError::SupportTooClose { distance: min, delta });
        }
    } else {
        return Ok(ScalarField::zeros(grid, "psi_green"));
    }
    let domain = grid.domain();
    let sources: Vec<(usize, f64)> = support
        .iter()
        .map(|&j| (j, f.at(j) * grid.weight(j) * grid.depth(j).sqrt()))
        .collect();
    // G-weighted sum of sources at every node: sum_y G(x,y) sqrt(b(y)) f(y) w_y
    use rayon::prelude::*;
    let potential: Vec<f64> = (0..grid.interior_count())
        .into_par_iter()
        .map(|i| {
            sources
                .iter()
                .map(|&(j, s)| node_kernel(grid, i, j) * s)
                .sum()
        })
        .collect();
    let rhs: Vec<f64> = (0..grid.interior_count())
        .map(|i| potential[i] * domain.laplacian_inv_sqrt_depth(grid.node_pos(i)))
        .collect();
    let remainder = if rhs.iter().all(|&v| v == 0.0) {
        vec![0.0; rhs.len()]
    } else {
        solver.solve_values(&rhs, tol, None)?.0
    };
    let psi: Vec<f64> = (0..grid.interior_count())
        .map(|i| grid.depth(i).sqrt() * potential[i] + remainder[i])
        .collect();
    Ok(ScalarField::from_interior(grid, "psi_green", &psi).with_time(f.time))
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct GreenCheck {
    pub pairs: usize,
    pub seed: u64,
    /// Largest `| |X-Y*|^2 |Y|^2 - |X-Y|^2 - (1-|X|^2)(1-|Y|^2) |` in disk coordinates.
    pub identity_max_deviation: f64,
    /// Largest `|G(x, y) - G(y, x)|` in lake coordinates.
    pub symmetry_max_deviation: f64,
}

/// Random point of the open disk, uniform in area, kept `margin` inside.
fn random_disk_point(rng: &mut impl rand::Rng, margin: f64) -> [f64; 2] {
    let r = (1.0 - margin) * rng.gen::<f64>().sqrt();
    let t = rng.gen::<f64>() * 2.0 * PI;
    [r * t.cos(), r * t.sin()]
}

/// Evaluates the reflection identity and kernel symmetry on `pairs` random
/// pairs drawn in the disk and carried to the lake.
pub fn green_check(domain: &LakeDomain, pairs: usize, seed: u64) -> GreenCheck {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut identity = 0.0f64;
    let mut symmetry = 0.0f64;
    let mut done = 0;
    while done < pairs {
        let zx = random_disk_point(&mut rng, 1e-3);
        let zy = random_disk_point(&mut rng, 1e-3);
        let ny2 = zy[0] * zy[0] + zy[1] * zy[1];
        if ny2 < 1e-12 || (zx[0] - zy[0]).hypot(zx[1] - zy[1]) < 1e-9 {
            continue;
        }
        let ys = [zy[0] / ny2, zy[1] / ny2];
        let lhs = ((zx[0] - ys[0]).powi(2) + (zx[1] - ys[1]).powi(2)) * ny2;
        let rhs = (zx[0] - zy[0]).powi(2)
            + (zx[1] - zy[1]).powi(2)
            + (1.0 - zx[0] * zx[0] - zx[1] * zx[1]) * (1.0 - ny2);
        identity = identity.max((lhs - rhs).abs());
        let (x, y) = (domain.from_disk(zx), domain.from_disk(zy));
        if let (Ok(a), Ok(b)) = (green_domain(domain, x, y), green_domain(domain, y, x)) {
            symmetry = symmetry.max((a - b).abs());
        }
        done += 1;
    }
    GreenCheck {
        pairs,
        seed,
        identity_max_deviation: identity,
        symmetry_max_deviation: symmetry,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_disk_point(rng: &mut ChaCha8Rng) -> [f64; 2] {
        super::random_disk_point(rng, 1e-3)
    }

    #[test]
    fn value_at_origin_source() {
        let g = green_disk([0.5, 0.0], [0.0, 0.0]).unwrap();
        assert!((g - 0.5f64.ln() / (2.0 * PI)).abs() < 1e-15);
    }

    #[test]
    fn vanishes_on_the_circle() {
        let y = [0.2, -0.3];
        let mut prev = f64::INFINITY;
        for eps in [1e-2, 1e-4, 1e-6, 1e-8] {
            let g = green_disk([(1.0 - eps) * 0.6, (1.0 - eps) * 0.8], y).unwrap().abs();
            assert!(g < prev);
            prev = g;
        }
        assert!(prev < 1e-7);
    }

    #[test]
    fn coincident_points_rejected() {
        assert_eq!(
            green_disk([0.1, 0.1], [0.1, 0.1]),
            Err(LakeError::CoincidentPoints)
        );
    }

    #[test]
    fn symmetric_on_random_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let x = random_disk_point(&mut rng);
            let y = random_disk_point(&mut rng);
            let a = green_disk(x, y).unwrap();
            let b = green_disk(y, x).unwrap();
            assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        }
    }

    #[test]
    fn reflection_identity_holds() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..10_000 {
            let x = random_disk_point(&mut rng);
            let y = random_disk_point(&mut rng);
            let ny2 = y[0] * y[0] + y[1] * y[1];
            if ny2 < 1e-6 {
                continue;
            }
            let ys = [y[0] / ny2, y[1] / ny2];
            let lhs = ((x[0] - ys[0]).powi(2) + (x[1] - ys[1]).powi(2)) * ny2;
            let rhs = (x[0] - y[0]).powi(2)
                + (x[1] - y[1]).powi(2)
                + (1.0 - x[0] * x[0] - x[1] * x[1]) * (1.0 - ny2);
            assert!((lhs - rhs).abs() < 1e-12 * lhs.max(1.0), "{lhs} {rhs}");
        }
    }

    #[test]
    fn log_cell_mean_matches_quadrature() {
        let m = 2000;
        let mut s = 0.0;
        for a in 0..m {
            for b in 0..m {
                let x = (a as f64 + 0.5) / m as f64 - 0.5;
                let y = (b as f64 + 0.5) / m as f64 - 0.5;
                s += 0.5 * (x * x + y * y).ln();
            }
        }
        s /= (m * m) as f64;
        assert!((s - LOG_CELL_MEAN).abs() < 1e-5, "{s} vs {LOG_CELL_MEAN}");
    }

    #[test]
    fn random_pair_check_on_disk() {
        let d = LakeDomain::disk(1.0, 1.0).unwrap();
        let c = green_check(&d, 10_000, 0);
        assert!(c.identity_max_deviation <= 1e-12, "{c:?}");
        assert!(c.symmetry_max_deviation <= 1e-12, "{c:?}");
        assert_eq!(c, green_check(&d, 10_000, 0));
    }
}

//! Sampled regularity quantities of a velocity field recovered from a stream
//! function: sup norm, scaled `L^p` norms of the gradient, log-Lipschitz
//! modulus, interior `C^1` bound and a boundary-layer diagnostic.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::stream::StreamSolution;
use crate::geometry::field::VectorField;
use crate::geometry::grid::Grid;

pub const GRAD_EXPONENTS: [f64; 5] = [2.0, 4.0, 8.0, 16.0, 32.0];
pub const HOLDER_BETA: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhiDiagnostic {
    /// `sup |psi / phi^(alpha+1)|` over the boundary band.
    pub sup_phi: f64,
    /// Largest sampled `|Phi(x) - Phi(y)| / |x - y|^beta` in the band.
    pub holder_quotient: f64,
    pub band_nodes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegularityReport {
    pub sup_u: f64,
    /// `(p, ||grad u||_{L^p} / p)`.
    pub grad_p_norms: Vec<(f64, f64)>,
    pub loglip_modulus: f64,
    /// `||grad u||_inf` over nodes at distance at least `k_margin` from the
    /// shore; zero when that set is empty.
    pub c1_interior: f64,
    pub k_nodes: usize,
    pub phi_diag: Option<PhiDiagnostic>,
}

#[derive(Debug, Clone, Copy)]
pub struct RegularityOptions {
    pub samples: usize,
    pub k_margin: f64,
    pub seed: u64,
    pub phi_diag: bool,
}

impl Default for RegularityOptions {
    fn default() -> Self {
        RegularityOptions {
            samples: 10_000,
            k_margin: 0.25,
            seed: 0,
            phi_diag: false,
        }
    }
}

/// Jacobian of `u` by centered differences, where both neighbours along
/// each axis carry unknowns.
pub fn velocity_jacobians(u: &VectorField) -> Vec<Option<[[f64; 2]; 2]>> {
    let grid = u.grid();
    let h = grid.h();
    (0..grid.interior_count())
        .map(|i| {
            let (ix, iy) = grid.coords(i);
            let e = grid.interior_at(ix + 1, iy)?;
            let w = grid.interior_at(ix - 1, iy)?;
            let n = grid.interior_at(ix, iy + 1)?;
            let s = grid.interior_at(ix, iy - 1)?;
            let (ue, uw, un, us) = (u.at(e), u.at(w), u.at(n), u.at(s));
            Some([
                [(ue[0] - uw[0]) / (2.0 * h), (un[0] - us[0]) / (2.0 * h)],
                [(ue[1] - uw[1]) / (2.0 * h), (un[1] - us[1]) / (2.0 * h)],
            ])
        })
        .collect()
}

fn frobenius(j: &[[f64; 2]; 2]) -> f64 {
    (j[0][0].powi(2) + j[0][1].powi(2) + j[1][0].powi(2) + j[1][1].powi(2)).sqrt()
}

/// Samples node pairs with log-uniform separation in `[2h, diam]`, snapped to
/// the lattice. Pairs that miss the interior or fall closer than `2h` are
/// discarded.
fn sample_pairs(
    grid: &Grid,
    nodes: &[usize],
    samples: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<(usize, usize, f64)> {
    let h = grid.h();
    let bb = grid.domain().bbox();
    let diam = (bb[2] - bb[0]).hypot(bb[3] - bb[1]);
    let (lo, hi) = ((2.0 * h).ln(), diam.ln());
    let mut out = Vec::with_capacity(samples);
    if nodes.is_empty() || lo >= hi {
        return out;
    }
    for _ in 0..samples {
        let i = nodes[rng.gen_range(0..nodes.len())];
        let r = (lo + (hi - lo) * rng.gen::<f64>()).exp();
        let t = rng.gen::<f64>() * std::f64::consts::TAU;
        let (ix, iy) = grid.coords(i);
        let jx = ix + (r * t.cos() / h).round() as i64;
        let jy = iy + (r * t.sin() / h).round() as i64;
        let Some(j) = grid.interior_at(jx, jy) else {
            continue;
        };
        let d = h * (((jx - ix).pow(2) + (jy - iy).pow(2)) as f64).sqrt();
        if d >= 2.0 * h {
            out.push((i, j, d));
        }
    }
    out
}

/// Largest sampled `|u(x) - u(y)| / (d (1 + |ln d|))` with `d = |x - y|`.
pub fn loglip_modulus(u: &VectorField, samples: usize, seed: u64) -> f64 {
    let grid = u.grid();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let all: Vec<usize> = (0..grid.interior_count()).collect();
    sample_pairs(grid, &all, samples, &mut rng)
        .into_iter()
        .map(|(i, j, d)| {
            let (a, b) = (u.at(i), u.at(j));
            (a[0] - b[0]).hypot(a[1] - b[1]) / (d * (1.0 + d.ln().abs()))
        })
        .fold(0.0, f64::max)
}

pub fn regularity_report(solution: &StreamSolution, opts: RegularityOptions) -> RegularityReport {
    let u = &solution.u;
    let grid = u.grid();
    let n = grid.interior_count();

    let sup_u = u.max_abs();
    let jac = velocity_jacobians(u);
    let grads: Vec<(usize, f64)> = jac
        .iter()
        .enumerate()
        .filter_map(|(i, j)| j.as_ref().map(|j| (i, frobenius(j))))
        .collect();
    let gmax = grads.iter().fold(0.0f64, |m, g| m.max(g.1));
    let grad_p_norms = GRAD_EXPONENTS
        .iter()
        .map(|&p| {
            if gmax == 0.0 {
                return (p, 0.0);
            }
            let s: f64 = grads
                .iter()
                .map(|&(i, g)| grid.weight(i) * (g / gmax).powf(p))
                .sum();
            (p, gmax * s.powf(1.0 / p) / p)
        })
        .collect();

    let loglip_modulus = loglip_modulus(u, opts.samples, opts.seed);

    let mut k_nodes = 0;
    let mut c1_interior = 0.0f64;
    for &(i, g) in &grads {
        if grid.boundary_distance(i) >= opts.k_margin {
            k_nodes += 1;
            c1_interior = c1_interior.max(g);
        }
    }

    let phi_diag = opts.phi_diag.then(|| {
        let alpha = grid.domain().alpha();
        let h = grid.h();
        let band: Vec<usize> = (0..n)
            .filter(|&i| {
                let d = grid.boundary_distance(i);
                d >= 2.0 * h && d <= opts.k_margin
            })
            .collect();
        let big_phi = |i: usize| solution.psi.at(i) / grid.phi(i).powf(alpha + 1.0);
        let sup_phi = band.iter().map(|&i| big_phi(i).abs()).fold(0.0, f64::max);
        let mut in_band = vec![false; n];
        band.iter().for_each(|&i| in_band[i] = true);
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(1));
        let holder_quotient = sample_pairs(grid, &band, opts.samples, &mut rng)
            .into_iter()
            .filter(|&(_, j, _)| in_band[j])
            .map(|(i, j, d)| (big_phi(i) - big_phi(j)).abs() / d.powf(HOLDER_BETA))
            .fold(0.0, f64::max);
        PhiDiagnostic {
            sup_phi,
            holder_quotient,
            band_nodes: band.len(),
        }
    });

    RegularityReport {
        sup_u,
        grad_p_norms,
        loglip_modulus,
        c1_interior,
        k_nodes,
        phi_diag,
    }
}

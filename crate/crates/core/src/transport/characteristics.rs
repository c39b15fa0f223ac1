//! Characteristics of a time-dependent velocity and semi-Lagrangian transport
//! of the potential vorticity along them.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{LakeError, Result};
use crate::geometry::field::{weighted_norm, ScalarField, VectorField, WeightMode};
use crate::geometry::grid::Grid;
use crate::interp::{sample_scalar_clamped, sample_velocity};

pub const LEDGER_EXPONENTS: [f64; 4] = [1.0, 2.0, 4.0, f64::INFINITY];

/// Velocity sampled at increasing times, linear in time between samples.
#[derive(Debug, Clone)]
pub struct VelocityHistory {
    times: Vec<f64>,
    fields: Vec<VectorField>,
}

impl VelocityHistory {
    pub fn new(times: Vec<f64>, fields: Vec<VectorField>) -> Result<Self> {
        if times.is_empty() || times.len() != fields.len() {
            return Err(LakeError::InvalidConfig(
                "velocity history needs one field per time".into(),
            ));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(LakeError::InvalidConfig(
                "velocity history times must increase".into(),
            ));
        }
        Ok(VelocityHistory { times, fields })
    }

    /// A single field used for all times.
    pub fn steady(u: VectorField) -> Self {
        VelocityHistory {
            times: vec![u.time],
            fields: vec![u],
        }
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn fields(&self) -> &[VectorField] {
        &self.fields
    }

    pub fn grid(&self) -> &Grid {
        self.fields[0].grid()
    }

    pub fn sup_speed(&self) -> f64 {
        self.fields.iter().map(|f| f.max_abs()).fold(0.0, f64::max)
    }

    /// Velocity at `(t, x)`; times outside the samples use the nearest end.
    pub fn velocity(&self, t: f64, x: [f64; 2]) -> Result<[f64; 2]> {
        let n = self.times.len();
        if n == 1 || t <= self.times[0] {
            return sample_velocity(&self.fields[0], x, t);
        }
        if t >= self.times[n - 1] {
            return sample_velocity(&self.fields[n - 1], x, t);
        }
        let k = self.times.partition_point(|&s| s <= t) - 1;
        let s = (t - self.times[k]) / (self.times[k + 1] - self.times[k]);
        let a = sample_velocity(&self.fields[k], x, t)?;
        if s == 0.0 {
            return Ok(a);
        }
        let b = sample_velocity(&self.fields[k + 1], x, t)?;
        Ok([a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])])
    }
}

/// Integrates `dX/ds = u(s, X)` from `a` to `b` (either direction) with
/// classical RK4 steps no longer than `dt`.
pub fn trace_characteristic(
    history: &VelocityHistory,
    x0: [f64; 2],
    a: f64,
    b: f64,
    dt: f64,
) -> Result<[f64; 2]> {
    if !(dt > 0.0) {
        return Err(LakeError::InvalidConfig(format!("step must be positive, got {dt}")));
    }
    let span = b - a;
    if span == 0.0 {
        return Ok(x0);
    }
    // tolerate roundoff so whole multiples of dt are not split
    let steps = (span.abs() / dt - 1e-9).ceil().max(1.0) as usize;
    let k = span / steps as f64;
    let mut x = x0;
    let mut t = a;
    let shift = |x: [f64; 2], v: [f64; 2], s: f64| [x[0] + s * v[0], x[1] + s * v[1]];
    for _ in 0..steps {
        let k1 = history.velocity(t, x)?;
        let k2 = history.velocity(t + 0.5 * k, shift(x, k1, 0.5 * k))?;
        let k3 = history.velocity(t + 0.5 * k, shift(x, k2, 0.5 * k))?;
        let k4 = history.velocity(t + k, shift(x, k3, k))?;
        x = [
            x[0] + k / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
            x[1] + k / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
        ];
        t += k;
        if x[0].is_nan() || history.grid().domain().phi(x) <= 0.0 {
            return Err(LakeError::LeftDomain { x: x[0], y: x[1], t });
        }
    }
    Ok(x)
}

/// Largest step allowed by `dt <= h / (2 sup |u|)`, capped at `span`.
pub fn cfl_step(history: &VelocityHistory, span: f64) -> f64 {
    let h = history.grid().h();
    let speed = history.sup_speed();
    if speed == 0.0 {
        span.abs().max(f64::MIN_POSITIVE)
    } else {
        (h / (2.0 * speed)).min(span.abs().max(f64::MIN_POSITIVE))
    }
}

/// Potential vorticity at one time with its support and `L^p` ledger.
#[derive(Debug, Clone)]
pub struct VorticityState {
    pub t: f64,
    pub omega: ScalarField,
    /// Values with `|omega| <= threshold` count as outside the support.
    pub threshold: f64,
    /// Distance from the support to the shore; `None` for an empty support.
    pub support_distance: Option<f64>,
    /// `(p, ||b^{1/p} omega||_{L^p})` for `p` in 1, 2, 4, inf.
    pub lp_ledger: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct StateSummary {
    pub t: f64,
    pub support_distance: Option<f64>,
    pub lp_ledger: Vec<(f64, f64)>,
    pub mass: f64,
}

impl VorticityState {
    pub fn new(omega: ScalarField, t: f64, threshold: f64) -> Self {
        let mut omega = omega;
        omega.time = t;
        let grid = omega.grid().clone();
        let support_distance = (0..grid.interior_count())
            .filter(|&i| omega.at(i).abs() > threshold)
            .map(|i| grid.boundary_distance(i))
            .min_by(|a, b| a.total_cmp(b));
        let lp_ledger = LEDGER_EXPONENTS
            .iter()
            .map(|&p| (p, weighted_norm(&omega, p, WeightMode::BPow).expect("p >= 1")))
            .collect();
        VorticityState {
            t,
            omega,
            threshold,
            support_distance,
            lp_ledger,
        }
    }

    pub fn grid(&self) -> &std::sync::Arc<Grid> {
        self.omega.grid()
    }

    pub fn support_nodes(&self) -> Vec<usize> {
        (0..self.grid().interior_count())
            .filter(|&i| self.omega.at(i).abs() > self.threshold)
            .collect()
    }

    /// `int b omega dx`.
    pub fn mass(&self) -> f64 {
        let g = self.grid();
        (0..g.interior_count())
            .map(|i| g.weight(i) * g.depth(i) * self.omega.at(i))
            .sum()
    }

    pub fn summary(&self) -> StateSummary {
        StateSummary {
            t: self.t,
            support_distance: self.support_distance,
            lp_ledger: self.lp_ledger.clone(),
            mass: self.mass(),
        }
    }
}

/// Characteristics over one window.
#[derive(Debug, Clone)]
pub struct FlowMap {
    pub a: f64,
    pub b: f64,
    /// `(interior index, X(b; a, x))` for support nodes at time `a`.
    pub forward: Vec<(usize, [f64; 2])>,
    /// `(interior index, X^{-1}(x))` for image nodes at time `b`.
    pub inverse: Vec<(usize, [f64; 2])>,
    pub dt: f64,
}

impl FlowMap {
    /// Largest `|X^{-1}(X(x)) - x|` over forward particles.
    pub fn round_trip_error(&self, history: &VelocityHistory) -> Result<f64> {
        let grid = history.grid();
        let errs: Result<Vec<f64>> = self
            .forward
            .par_iter()
            .map(|&(i, y)| {
                let x = grid.node_pos(i);
                let back = trace_characteristic(history, y, self.b, self.a, self.dt)?;
                Ok((back[0] - x[0]).hypot(back[1] - x[1]))
            })
            .collect();
        Ok(errs?.into_iter().fold(0.0, f64::max))
    }

    /// Smallest distance to the shore over the forward endpoints.
    pub fn min_particle_distance(&self, grid: &Grid) -> Option<f64> {
        self.forward
            .iter()
            .map(|&(_, y)| grid.domain().boundary_distance(y))
            .min_by(|a, b| a.total_cmp(b))
    }
}

/// Interior nodes within `cells` lattice steps (in the max norm) of a
/// support node.
fn dilated_support(grid: &Grid, support: &[usize], cells: i64) -> Vec<usize> {
    let nx = grid.nx() as i64;
    let ny = grid.ny() as i64;
    let mut mark = vec![false; grid.lattice_len()];
    for &i in support {
        mark[grid.interior()[i]] = true;
    }
    let mut rows = vec![false; mark.len()];
    for y in 0..ny {
        for x in 0..nx {
            if mark[(y * nx + x) as usize] {
                for k in (x - cells).max(0)..=(x + cells).min(nx - 1) {
                    rows[(y * nx + k) as usize] = true;
                }
            }
        }
    }
    let mut out = vec![false; mark.len()];
    for x in 0..nx {
        for y in 0..ny {
            if rows[(y * nx + x) as usize] {
                for k in (y - cells).max(0)..=(y + cells).min(ny - 1) {
                    out[(k * nx + x) as usize] = true;
                }
            }
        }
    }
    (0..grid.interior_count())
        .filter(|&i| out[grid.interior()[i]])
        .collect()
}

/// Nodes of the image paired with their departure points.
pub type DepartureMap = Vec<(usize, [f64; 2])>;

/// Pushes `omega` at time `a` forward to time `b` by tracing every node of
/// the possible image back to its departure point.
pub fn transport_vorticity(
    state_a: &VorticityState,
    history: &VelocityHistory,
    b: f64,
    dt: f64,
) -> Result<(VorticityState, DepartureMap)> {
    let grid = state_a.grid();
    let a = state_a.t;
    let support = state_a.support_nodes();
    let reach = history.sup_speed() * (b - a).abs();
    let cells = (reach / grid.h()).ceil() as i64 + 2;
    let image = dilated_support(grid, &support, cells);
    let departures: Result<Vec<(usize, [f64; 2], f64)>> = image
        .par_iter()
        .map(|&i| {
            let y = trace_characteristic(history, grid.node_pos(i), b, a, dt)?;
            Ok((i, y, sample_scalar_clamped(&state_a.omega, y)))
        })
        .collect();
    let departures = departures?;
    let mut omega = ScalarField::zeros(grid, &state_a.omega.name);
    let mut inverse = Vec::with_capacity(departures.len());
    for (i, y, v) in departures {
        omega.set(i, v);
        inverse.push((i, y));
    }
    Ok((VorticityState::new(omega, b, state_a.threshold), inverse))
}

/// Forward endpoints of the support particles of `state_a`.
pub fn forward_particles(
    state_a: &VorticityState,
    history: &VelocityHistory,
    b: f64,
    dt: f64,
) -> Result<Vec<(usize, [f64; 2])>> {
    let grid = state_a.grid();
    state_a
        .support_nodes()
        .par_iter()
        .map(|&i| Ok((i, trace_characteristic(history, grid.node_pos(i), state_a.t, b, dt)?)))
        .collect()
}

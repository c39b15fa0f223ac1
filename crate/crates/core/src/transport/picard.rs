//! Fixed-point iteration over one time window: velocity from the current
//! vorticity iterate, then linear transport of the window's initial data.

use serde::{Deserialize, Serialize};

use super::characteristics::{
    cfl_step, forward_particles, transport_vorticity, FlowMap, VelocityHistory, VorticityState,
};
use crate::elliptic::stream::{velocity_from_stream, StreamSolver};
use crate::error::{LakeError, Result};
use crate::geometry::field::{ScalarField, VectorField};

/// Velocity samples per window, equispaced and including both ends.
pub const WINDOW_SAMPLES: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PicardConfig {
    /// Sup-norm change between iterates that counts as converged, relative
    /// to the sup norm of the window's initial vorticity.
    pub tol_picard: f64,
    pub max_iter: usize,
    pub tol_solve: f64,
    /// Largest accepted contraction ratio.
    pub max_ratio: f64,
    /// RK4 step; `None` uses `h / (2 sup |u|)`.
    pub dt: Option<f64>,
}

impl Default for PicardConfig {
    fn default() -> Self {
        PicardConfig {
            tol_picard: 1e-8,
            max_iter: 30,
            tol_solve: 1e-11,
            max_ratio: 0.75,
            dt: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PicardWindow {
    pub a: f64,
    pub b: f64,
    pub iterates: usize,
    /// `sup |omega_{n+1} - omega_n|` over the window's sample times.
    pub diffs: Vec<f64>,
    pub contraction_ratios: Vec<f64>,
    pub converged: bool,
}

impl PicardWindow {
    pub fn length(&self) -> f64 {
        self.b - self.a
    }
}

#[derive(Debug, Clone)]
pub struct WindowOutcome {
    pub state_b: VorticityState,
    pub window: PicardWindow,
    pub flow: FlowMap,
    /// Converged velocity at the window's sample times.
    pub history: VelocityHistory,
    /// Stream functions matching `history`.
    pub streams: Vec<ScalarField>,
}

/// Stream function and velocity of a vorticity field (`f = b omega`).
pub fn velocity_of(
    solver: &StreamSolver,
    omega: &ScalarField,
    tol: f64,
    guess: Option<&ScalarField>,
) -> Result<(ScalarField, VectorField)> {
    let grid = solver.grid();
    let f: Vec<f64> = (0..grid.interior_count())
        .map(|i| grid.depth(i) * omega.at(i))
        .collect();
    let guess_v = guess.map(|g| g.interior_values());
    let psi = if f.iter().all(|&v| v == 0.0) {
        vec![0.0; f.len()]
    } else {
        solver.solve_values(&f, tol, guess_v.as_deref())?.0
    };
    let psi = ScalarField::from_interior(grid, "psi", &psi).with_time(omega.time);
    let u = velocity_from_stream(&psi);
    Ok((psi, u))
}

/// RK4 step for a window: the configured step or the CFL step, never longer
/// than one velocity sample interval so steps do not straddle the kinks of
/// the piecewise-linear time interpolation.
pub fn window_step(cfg: &PicardConfig, history: &VelocityHistory, a: f64, b: f64) -> f64 {
    let interval = (b - a) / (WINDOW_SAMPLES - 1) as f64;
    let dt = cfg.dt.unwrap_or_else(|| cfl_step(history, interval));
    if dt >= interval {
        interval
    } else {
        // a whole number of steps per interval
        interval / (interval / dt).ceil()
    }
}

fn sample_times(a: f64, b: f64) -> Vec<f64> {
    (0..WINDOW_SAMPLES)
        .map(|q| {
            if q + 1 == WINDOW_SAMPLES {
                b
            } else {
                a + (b - a) * q as f64 / (WINDOW_SAMPLES - 1) as f64
            }
        })
        .collect()
}

/// Runs the iteration on `[a, b]`. `start` carries the stream function and
/// velocity of `state_a`, which every iterate shares.
pub fn picard_window(
    solver: &StreamSolver,
    state_a: &VorticityState,
    start: &(ScalarField, VectorField),
    b: f64,
    cfg: &PicardConfig,
) -> Result<WindowOutcome> {
    let a = state_a.t;
    if !(b > a) {
        return Err(LakeError::InvalidConfig(format!("empty window [{a}, {b}]")));
    }
    let times = sample_times(a, b);
    let scale = state_a.omega.max_abs();
    let tol = cfg.tol_picard * scale.max(f64::MIN_POSITIVE);

    // constant-in-time extension of the window's initial data
    let mut iterate: Vec<ScalarField> = times
        .iter()
        .map(|&t| state_a.omega.clone().with_time(t))
        .collect();
    let mut streams: Vec<ScalarField> = times.iter().map(|_| start.0.clone()).collect();
    let mut window = PicardWindow {
        a,
        b,
        iterates: 0,
        diffs: Vec::new(),
        contraction_ratios: Vec::new(),
        converged: false,
    };
    let mut bad_ratios = 0;
    loop {
        // velocity of the current iterate at the sample times
        let mut fields = vec![start.1.clone().with_time(a)];
        let mut new_streams = vec![start.0.clone()];
        for q in 1..times.len() {
            let (psi, u) = velocity_of(solver, &iterate[q], cfg.tol_solve, Some(&streams[q]))?;
            fields.push(u.with_time(times[q]));
            new_streams.push(psi.with_time(times[q]));
        }
        streams = new_streams;
        let history = VelocityHistory::new(times.clone(), fields)?;
        let dt = window_step(cfg, &history, a, b);

        let mut next = vec![state_a.omega.clone().with_time(a)];
        let mut diff = 0.0f64;
        let mut last_state = None;
        let mut last_inverse = Vec::new();
        for q in 1..times.len() {
            let (s, inverse) = transport_vorticity(state_a, &history, times[q], dt)?;
            diff = diff.max(s.omega.sub(&iterate[q])?.max_abs());
            next.push(s.omega.clone());
            if q + 1 == times.len() {
                last_state = Some(s);
                last_inverse = inverse;
            }
        }
        window.iterates += 1;
        if let Some(&prev) = window.diffs.last() {
            window
                .contraction_ratios
                .push(if prev > 0.0 { diff / prev } else { 0.0 });
        }
        window.diffs.push(diff);
        iterate = next;

        if diff <= tol {
            window.converged = true;
            let state_b = last_state.expect("window has an end sample");
            let forward = forward_particles(state_a, &history, b, dt)?;
            let flow = FlowMap {
                a,
                b,
                forward,
                inverse: last_inverse,
                dt,
            };
            return Ok(WindowOutcome {
                state_b,
                window,
                flow,
                history,
                streams,
            });
        }
        if let Some(&r) = window.contraction_ratios.last() {
            if r > cfg.max_ratio {
                bad_ratios += 1;
                if bad_ratios >= 2 {
                    return Err(LakeError::NoContraction {
                        window: b - a,
                        ratios: window.contraction_ratios.clone(),
                    });
                }
            }
        }
        if window.iterates >= cfg.max_iter {
            return Err(LakeError::MaxIterExceeded {
                max_iter: cfg.max_iter,
                last_diff: diff,
            });
        }
    }
}

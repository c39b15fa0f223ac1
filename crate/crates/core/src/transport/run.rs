//! Chained Picard windows over `[0, T]` with window halving, snapshots and the
//! support-confinement audit.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::characteristics::{transport_vorticity, VelocityHistory, VorticityState};
use super::picard::{picard_window, velocity_of, window_step, PicardConfig, PicardWindow};
use crate::elliptic::regularity::loglip_modulus;
use crate::elliptic::stream::StreamSolver;
use crate::error::{LakeError, Result};
use crate::geometry::field::{ScalarField, VectorField};
use crate::geometry::grid::Grid;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InviscidConfig {
    pub horizon: f64,
    /// Initial window length.
    pub window: f64,
    /// Windows shorter than this abort the run.
    pub min_window: f64,
    /// Number of equal intervals between snapshots over `[0, T]`.
    pub snapshots: usize,
    pub picard: PicardConfig,
    /// Values below `support_threshold * max |omega_0|` are outside the support.
    pub support_threshold: f64,
    pub loglip_samples: usize,
    /// Multiplier on the measured log-Lipschitz modulus in the support floor.
    pub floor_safety: f64,
    pub seed: u64,
}

impl Default for InviscidConfig {
    fn default() -> Self {
        InviscidConfig {
            horizon: 1.0,
            window: 0.125,
            min_window: 0.125 / 64.0,
            snapshots: 20,
            picard: PicardConfig::default(),
            support_threshold: 1e-10,
            loglip_samples: 10_000,
            floor_safety: 1.5,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct InviscidSnapshot {
    pub state: VorticityState,
    pub psi: ScalarField,
    pub u: VectorField,
}

#[derive(Debug, Clone)]
pub struct InviscidTrajectory {
    pub snapshots: Vec<InviscidSnapshot>,
    pub windows: Vec<PicardWindow>,
    /// Windows that failed to contract before being halved.
    pub rejected: Vec<(f64, f64, Vec<f64>)>,
    pub initial_support_distance: Option<f64>,
    pub min_support_distance: Option<f64>,
    /// Largest sampled log-Lipschitz modulus over the snapshots.
    pub loglip_modulus: f64,
    /// `d0^exp(safety * C_lip * T)`.
    pub support_floor: Option<f64>,
    pub floor_respected: bool,
    pub horizon: f64,
}

impl InviscidTrajectory {
    pub fn grid(&self) -> &Arc<Grid> {
        self.snapshots[0].state.grid()
    }

    /// Velocities at the snapshot times, for use as a reference flow.
    pub fn velocity_history(&self) -> Result<VelocityHistory> {
        VelocityHistory::new(
            self.snapshots.iter().map(|s| s.state.t).collect(),
            self.snapshots.iter().map(|s| s.u.clone()).collect(),
        )
    }
}

/// Rejects initial data that is not numerically C^1 with support strictly
/// inside the lake.
pub fn validate_initial_vorticity(omega: &ScalarField, threshold: f64) -> Result<()> {
    let grid = omega.grid();
    if !omega.is_finite() {
        return Err(LakeError::InvalidInitialData("non-finite vorticity".into()));
    }
    let amp = omega.max_abs();
    if amp == 0.0 {
        return Ok(());
    }
    let state = VorticityState::new(omega.clone(), 0.0, threshold * amp);
    let d = state.support_distance.unwrap_or(f64::INFINITY);
    if !(d > 2.0 * grid.h()) {
        return Err(LakeError::InvalidInitialData(format!(
            "support reaches within {d:.3e} of the shore (needs > 2h = {:.3e})",
            2.0 * grid.h()
        )));
    }
    // compact support: vorticity vanishes on the layer next to the shore
    for i in 0..grid.interior_count() {
        let touches_shore = grid
            .arms(i)
            .iter()
            .any(|a| matches!(a, crate::geometry::grid::Arm::Shore(_)));
        if touches_shore && omega.at(i).abs() > threshold * amp {
            return Err(LakeError::InvalidInitialData(
                "vorticity does not vanish next to the shore".into(),
            ));
        }
    }
    // a jump of more than half the amplitude between neighbours is not C^1
    let mut jump = 0.0f64;
    for i in 0..grid.interior_count() {
        for arm in grid.arms(i) {
            if let crate::geometry::grid::Arm::Node(j) = *arm {
                jump = jump.max((omega.at(i) - omega.at(j)).abs());
            }
        }
    }
    if jump > 0.5 * amp {
        return Err(LakeError::InvalidInitialData(format!(
            "neighbouring values jump by {jump:.3e}, not resolved as C^1"
        )));
    }
    Ok(())
}

fn snapshot_times(cfg: &InviscidConfig) -> Vec<f64> {
    let m = cfg.snapshots.max(1);
    (0..=m)
        .map(|k| {
            if k == m {
                cfg.horizon
            } else {
                cfg.horizon * k as f64 / m as f64
            }
        })
        .collect()
}

pub fn run_inviscid(
    solver: &StreamSolver,
    omega0: &ScalarField,
    cfg: &InviscidConfig,
) -> Result<InviscidTrajectory> {
    if !(cfg.horizon > 0.0) || !(cfg.window > 0.0) || !(cfg.min_window > 0.0) {
        return Err(LakeError::InvalidConfig(
            "horizon, window and min_window must be positive".into(),
        ));
    }
    validate_initial_vorticity(omega0, cfg.support_threshold)?;
    let threshold = cfg.support_threshold * omega0.max_abs();
    let tol = cfg.picard.tol_solve;

    let mut state = VorticityState::new(omega0.clone(), 0.0, threshold);
    let mut start = velocity_of(solver, &state.omega, tol, None)?;
    let targets = snapshot_times(cfg);
    let mut snapshots = vec![InviscidSnapshot {
        state: state.clone(),
        psi: start.0.clone(),
        u: start.1.clone(),
    }];
    let mut next_snap = 1;
    let mut windows = Vec::new();
    let mut rejected = Vec::new();
    let mut len = cfg.window;
    while state.t < cfg.horizon {
        let a = state.t;
        // land exactly on the horizon and avoid slivers
        let mut b = a + len;
        if b > cfg.horizon || cfg.horizon - b < 1e-9 * cfg.horizon {
            b = cfg.horizon;
        }
        let outcome = match picard_window(solver, &state, &start, b, &cfg.picard) {
            Ok(o) => o,
            Err(err @ (LakeError::NoContraction { .. } | LakeError::MaxIterExceeded { .. })) => {
                let ratios = match err {
                    LakeError::NoContraction { ratios, .. } => ratios,
                    _ => Vec::new(),
                };
                rejected.push((a, b, ratios));
                len *= 0.5;
                if len < cfg.min_window {
                    return Err(LakeError::WindowUnderflow {
                        window: len,
                        min: cfg.min_window,
                    });
                }
                continue;
            }
            Err(e) => return Err(e),
        };
        let dt = window_step(&cfg.picard, &outcome.history, a, b);
        while next_snap < targets.len() && targets[next_snap] <= b + 1e-12 {
            let ts = targets[next_snap];
            let snap_state = if (ts - b).abs() <= 1e-12 {
                outcome.state_b.clone()
            } else {
                transport_vorticity(&state, &outcome.history, ts, dt)?.0
            };
            let (psi, u) = velocity_of(solver, &snap_state.omega, tol, None)?;
            snapshots.push(InviscidSnapshot {
                state: snap_state,
                psi,
                u,
            });
            next_snap += 1;
        }
        windows.push(outcome.window);
        state = outcome.state_b;
        let q = outcome.streams.len() - 1;
        start = (
            outcome.streams[q].clone(),
            outcome.history.fields()[q].clone(),
        );
    }

    let mut loglip = 0.0f64;
    for (k, s) in snapshots.iter().enumerate() {
        loglip = loglip.max(loglip_modulus(&s.u, cfg.loglip_samples, cfg.seed.wrapping_add(k as u64)));
    }
    let d0 = snapshots[0].state.support_distance;
    let min_support_distance = snapshots
        .iter()
        .filter_map(|s| s.state.support_distance)
        .min_by(|a, b| a.total_cmp(b));
    let support_floor = d0.map(|d| d.powf((cfg.floor_safety * loglip * cfg.horizon).exp()));
    let floor_respected = match (support_floor, min_support_distance) {
        (Some(f), Some(m)) => m >= f && m > 0.0,
        _ => true,
    };
    Ok(InviscidTrajectory {
        snapshots,
        windows,
        rejected,
        initial_support_distance: d0,
        min_support_distance,
        loglip_modulus: loglip,
        support_floor,
        floor_respected,
        horizon: cfg.horizon,
    })
}

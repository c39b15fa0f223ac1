//! Time stepping: Crank-Nicolson rotational advection inside the
//! divergence-free space, then a theta-scheme viscous solve.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::ops::ViscousOps;
use crate::error::{LakeError, Result};
use crate::geometry::field::{ScalarField, VectorField};
use crate::geometry::grid::Grid;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ViscousConfig {
    pub mu: f64,
    /// Drag scale; the shore drag is `eta_mu = eta mu^-beta`.
    pub eta: f64,
    pub beta: f64,
    /// 1 is backward Euler, 1/2 Crank-Nicolson.
    pub theta: f64,
    /// Fixed step; `None` takes `cfl * h / sup |u_0|`, capped at the snapshot
    /// interval.
    pub dt: Option<f64>,
    pub cfl: f64,
    pub tol_solve: f64,
    /// Convergence of the advection fixed point, relative to `||u_n||`.
    pub tol_fixed: f64,
    pub max_fixed: usize,
    /// Allowed energy growth per step, relative to the initial energy.
    pub energy_tol: f64,
    /// Keep the stream function of every step (needed by the energy audit).
    pub keep_steps: bool,
}

impl Default for ViscousConfig {
    fn default() -> Self {
        ViscousConfig {
            mu: 1e-3,
            eta: 0.0,
            beta: 0.0,
            theta: 1.0,
            dt: None,
            cfl: 0.5,
            tol_solve: 1e-12,
            tol_fixed: 1e-13,
            max_fixed: 50,
            energy_tol: 1e-10,
            keep_steps: false,
        }
    }
}

impl ViscousConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(LakeError::InvalidConfig(m.into()));
        if !(self.mu >= 0.0 && self.mu.is_finite()) {
            return bad("mu must be finite and nonnegative");
        }
        if !(self.eta >= 0.0 && self.eta.is_finite()) {
            return bad("eta must be finite and nonnegative");
        }
        if !(0.0..1.0).contains(&self.beta) {
            return bad("beta must lie in [0, 1)");
        }
        if !(0.0..=1.0).contains(&self.theta) {
            return bad("theta must lie in [0, 1]");
        }
        if let Some(dt) = self.dt {
            if !(dt > 0.0) {
                return bad("dt must be positive");
            }
        }
        if !(self.cfl > 0.0) || !(self.tol_solve > 0.0) || !(self.tol_fixed > 0.0) || !(self.energy_tol >= 0.0) {
            return bad("cfl and tolerances must be positive");
        }
        Ok(())
    }

    /// `eta mu^-beta`.
    pub fn eta_mu(&self) -> f64 {
        if self.eta == 0.0 {
            0.0
        } else {
            self.eta * self.mu.powf(-self.beta)
        }
    }

    /// Coefficient of the shore integral, `mu eta_mu = eta mu^(1 - beta)`.
    pub fn drag(&self) -> f64 {
        if self.eta == 0.0 || self.mu == 0.0 {
            0.0
        } else {
            self.eta * self.mu.powf(1.0 - self.beta)
        }
    }

    /// Explicit diffusion bound `h^2 b_min / (8 mu b_max)`.
    pub fn diffusive_limit(&self, grid: &Grid) -> f64 {
        let d = grid.depths();
        let (lo, hi) = d
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), &b| (lo.min(b), hi.max(b)));
        grid.h().powi(2) * lo / (8.0 * self.mu * hi)
    }
}

#[derive(Debug, Clone)]
pub struct ViscousState {
    pub t: f64,
    pub psi: ScalarField,
    pub u: VectorField,
    /// `||u||^2_{L2_b} / 2`.
    pub kinetic_energy: f64,
}

impl ViscousState {
    pub fn from_stream(ops: &ViscousOps, psi: &ScalarField, t: f64) -> Result<Self> {
        crate::geometry::field::check_same(ops.grid(), psi.grid())?;
        if !psi.is_finite() {
            return Err(LakeError::InvalidInitialData("non-finite stream function".into()));
        }
        Ok(Self::from_values(ops, &psi.interior_values(), t))
    }

    pub(crate) fn from_values(ops: &ViscousOps, psi: &[f64], t: f64) -> Self {
        let grid = ops.grid();
        ViscousState {
            t,
            psi: ScalarField::from_interior(grid, "psi", psi).with_time(t),
            u: ops.velocity_field(psi, t),
            kinetic_energy: 0.5 * ops.mass(psi),
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.psi.grid()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepInfo {
    pub fixed_iterations: usize,
    pub energy_before: f64,
    /// After advection, before the viscous solve.
    pub energy_advected: f64,
    pub energy_after: f64,
    /// `dt K(u_{n+1})`, the energy removed by the viscous form.
    pub dissipated: f64,
}

/// Advances interior stream values by `dt`. `e0` is the reference energy for
/// the growth tolerance.
pub fn step_values(
    ops: &ViscousOps,
    psi: &[f64],
    cfg: &ViscousConfig,
    dt: f64,
    e0: f64,
) -> Result<(Vec<f64>, StepInfo)> {
    let n = psi.len();
    let mut m0 = vec![0.0; n];
    ops.apply_mass(psi, &mut m0);
    let norm0 = crate::elliptic::operator::dot(psi, &m0).max(0.0).sqrt();
    let energy_before = 0.5 * norm0 * norm0;

    // mass (psi* - psi) = -dt adv((psi + psi*) / 2)
    let mut star = psi.to_vec();
    let mut iters = 0;
    if norm0 > 0.0 {
        loop {
            let half: Vec<f64> = psi.iter().zip(&star).map(|(a, b)| 0.5 * (a + b)).collect();
            let adv = ops.advection(&half);
            let rhs: Vec<f64> = m0.iter().zip(&adv).map(|(m, a)| m - dt * a).collect();
            let (next, _) = ops.solve_system(&rhs, 0.0, 0.0, 0.0, cfg.tol_solve, Some(&star))?;
            iters += 1;
            let diff: Vec<f64> = next.iter().zip(&star).map(|(a, b)| a - b).collect();
            let change = ops.mass(&diff).max(0.0).sqrt();
            star = next;
            if change <= cfg.tol_fixed * norm0 {
                break;
            }
            if iters >= cfg.max_fixed {
                return Err(LakeError::MaxIterExceeded {
                    max_iter: cfg.max_fixed,
                    last_diff: change,
                });
            }
        }
    }
    let energy_advected = 0.5 * ops.mass(&star);

    let drag = cfg.drag();
    let next = if cfg.mu == 0.0 && drag == 0.0 || norm0 == 0.0 {
        star
    } else {
        let mut rhs = vec![0.0; n];
        ops.apply_mass(&star, &mut rhs);
        if cfg.theta < 1.0 {
            ops.add_viscous(&star, cfg.mu, drag, -(1.0 - cfg.theta) * dt, &mut rhs);
        }
        ops.solve_system(&rhs, cfg.mu, drag, cfg.theta * dt, cfg.tol_solve, Some(&star))?.0
    };
    let energy_after = 0.5 * ops.mass(&next);
    let dissipated = dt * ops.dissipation(&next, cfg.mu, drag);
    if !energy_after.is_finite() || energy_after > energy_before + cfg.energy_tol * e0 {
        return Err(LakeError::StabilityViolation {
            t: f64::NAN,
            before: energy_before,
            after: energy_after,
        });
    }
    Ok((
        next,
        StepInfo {
            fixed_iterations: iters,
            energy_before,
            energy_advected,
            energy_after,
            dissipated,
        },
    ))
}

/// One step of the viscous scheme.
pub fn viscous_step(
    ops: &ViscousOps,
    state: &ViscousState,
    cfg: &ViscousConfig,
    dt: f64,
) -> Result<(ViscousState, StepInfo)> {
    cfg.validate()?;
    let psi = state.psi.interior_values();
    let (next, info) = step_values(ops, &psi, cfg, dt, state.kinetic_energy).map_err(|e| stamp(e, state.t))?;
    Ok((ViscousState::from_values(ops, &next, state.t + dt), info))
}

fn stamp(e: LakeError, t: f64) -> LakeError {
    match e {
        LakeError::StabilityViolation { before, after, .. } => LakeError::StabilityViolation { t, before, after },
        e => e,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepRecord {
    pub t: f64,
    pub energy: f64,
    pub fixed_iterations: usize,
    /// Cumulative `int_0^t 2 mu ||D u||^2_{L2_b}`.
    pub strain_dissipation: f64,
    /// Cumulative energy removed by the full viscous form.
    pub dissipation: f64,
}

#[derive(Debug, Clone)]
pub struct ViscousTrajectory {
    pub config: ViscousConfig,
    pub dt: f64,
    pub horizon: f64,
    pub snapshots: Vec<ViscousState>,
    /// One record per step, starting with `t = 0`.
    pub steps: Vec<StepRecord>,
    /// Interior stream values per step, when `keep_steps` is set.
    pub step_psi: Option<Vec<Vec<f64>>>,
}

impl ViscousTrajectory {
    pub fn grid(&self) -> &Arc<Grid> {
        self.snapshots[0].grid()
    }

    /// Largest per-step energy increase relative to the initial energy.
    pub fn max_energy_increase(&self) -> f64 {
        let e0 = self.steps[0].energy;
        let worst = self
            .steps
            .windows(2)
            .map(|w| w[1].energy - w[0].energy)
            .fold(f64::NEG_INFINITY, f64::max);
        if e0 > 0.0 {
            worst / e0
        } else {
            worst
        }
    }
}

/// Step length: configured or CFL-limited, a whole divisor of the snapshot
/// interval.
pub fn viscous_dt(ops: &ViscousOps, psi0: &[f64], cfg: &ViscousConfig, interval: f64) -> f64 {
    let dt = cfg.dt.unwrap_or_else(|| {
        let sup = ops
            .velocity(psi0)
            .iter()
            .map(|v| v[0].hypot(v[1]))
            .fold(0.0, f64::max);
        if sup > 0.0 {
            cfg.cfl * ops.grid().h() / sup
        } else {
            interval
        }
    });
    if dt >= interval {
        interval
    } else {
        interval / (interval / dt).ceil()
    }
}

/// Steps `psi0` to `horizon`, recording `snapshots` equal intervals.
pub fn run_viscous(
    ops: &ViscousOps,
    psi0: &ScalarField,
    horizon: f64,
    snapshots: usize,
    cfg: &ViscousConfig,
) -> Result<ViscousTrajectory> {
    cfg.validate()?;
    if !(horizon > 0.0) {
        return Err(LakeError::InvalidConfig("horizon must be positive".into()));
    }
    let first = ViscousState::from_stream(ops, psi0, 0.0)?;
    let m = snapshots.max(1);
    let interval = horizon / m as f64;
    let mut psi = psi0.interior_values();
    let dt = viscous_dt(ops, &psi, cfg, interval);
    if cfg.theta < 0.5 && cfg.mu > 0.0 && dt > cfg.diffusive_limit(ops.grid()) {
        return Err(LakeError::InvalidConfig(format!(
            "dt = {dt:.3e} exceeds the explicit diffusion limit {:.3e}",
            cfg.diffusive_limit(ops.grid())
        )));
    }
    let per = (interval / dt).round() as usize;
    let e0 = first.kinetic_energy;
    let mut steps = vec![StepRecord {
        t: 0.0,
        energy: e0,
        fixed_iterations: 0,
        strain_dissipation: 0.0,
        dissipation: 0.0,
    }];
    let mut kept = cfg.keep_steps.then(|| vec![psi.clone()]);
    let mut out = vec![first];
    let (mut strain_int, mut diss_int) = (0.0, 0.0);
    for k in 1..=m {
        for s in 1..=per {
            let t0 = steps.last().expect("initial record").t;
            let (next, info) = step_values(ops, &psi, cfg, dt, e0).map_err(|e| stamp(e, t0))?;
            psi = next;
            strain_int += dt * 2.0 * cfg.mu * ops.strain_sq(&psi);
            diss_int += info.dissipated;
            let t = if s == per {
                if k == m {
                    horizon
                } else {
                    interval * k as f64
                }
            } else {
                interval * (k - 1) as f64 + dt * s as f64
            };
            steps.push(StepRecord {
                t,
                energy: info.energy_after,
                fixed_iterations: info.fixed_iterations,
                strain_dissipation: strain_int,
                dissipation: diss_int,
            });
            if let Some(kept) = kept.as_mut() {
                kept.push(psi.clone());
            }
        }
        out.push(ViscousState::from_values(ops, &psi, steps.last().expect("step").t));
    }
    Ok(ViscousTrajectory {
        config: *cfg,
        dt,
        horizon,
        snapshots: out,
        steps,
        step_psi: kept,
    })
}

//! Per-step check of the energy inequality for `w = u^mu - u` against a
//! reference inviscid flow, and its Gronwall envelope.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use super::ops::ViscousOps;
use super::step::ViscousTrajectory;
use crate::elliptic::regularity::velocity_jacobians;
use crate::error::{LakeError, Result};
use crate::geometry::field::{check_same, ScalarField};
use crate::transport::InviscidTrajectory;

/// Stream functions of the reference flow, linear in time between samples.
#[derive(Debug, Clone)]
pub struct ReferenceFlow {
    times: Vec<f64>,
    psi: Vec<Vec<f64>>,
}

impl ReferenceFlow {
    pub fn new(samples: &[ScalarField]) -> Result<Self> {
        if samples.is_empty() {
            return Err(LakeError::InvalidConfig("reference flow needs a sample".into()));
        }
        for w in samples.windows(2) {
            check_same(w[0].grid(), w[1].grid())?;
            if !(w[1].time > w[0].time) {
                return Err(LakeError::InvalidConfig("reference times must increase".into()));
            }
        }
        Ok(ReferenceFlow {
            times: samples.iter().map(|s| s.time).collect(),
            psi: samples.iter().map(|s| s.interior_values()).collect(),
        })
    }

    pub fn from_inviscid(traj: &InviscidTrajectory) -> Result<Self> {
        let psi: Vec<ScalarField> = traj
            .snapshots
            .iter()
            .map(|s| s.psi.clone().with_time(s.state.t))
            .collect();
        Self::new(&psi)
    }

    pub fn at(&self, t: f64) -> Vec<f64> {
        let k = self.times.partition_point(|&s| s <= t);
        if k == 0 {
            return self.psi[0].clone();
        }
        if k == self.times.len() {
            return self.psi[k - 1].clone();
        }
        let (a, b) = (self.times[k - 1], self.times[k]);
        let s = (t - a) / (b - a);
        self.psi[k - 1]
            .iter()
            .zip(&self.psi[k])
            .map(|(x, y)| x + s * (y - x))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AuditRow {
    pub step: usize,
    pub t: f64,
    /// `d/dt ||w||^2 / 2` plus the three viscous and drag terms at `w + u/2`.
    pub lhs: f64,
    /// `K(u)/4 + ||grad u||_inf ||w||^2`.
    pub rhs: f64,
    /// Gronwall bound on `||w||^2`.
    pub envelope: f64,
    /// `||w||_{L2_b}`.
    pub w_norm: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EnergyAudit {
    pub tol: f64,
    pub rows: Vec<AuditRow>,
    /// First step with `lhs > rhs (1 + tol)`.
    pub first_violation: Option<usize>,
    /// `||w||^2 <= envelope (1 + tol)` at every step.
    pub envelope_pass: bool,
    /// Fitted constant in `K(u)/4 <= (mu + eta mu^(1-beta)) C ||u||^2_{H1}`.
    pub c_empirical: f64,
    /// `int_0^T ||grad u||_inf`.
    pub grad_integral: f64,
}

impl EnergyAudit {
    pub fn passed(&self) -> bool {
        self.first_violation.is_none() && self.envelope_pass
    }

    pub fn check(&self) -> Result<()> {
        if let Some(k) = self.first_violation {
            let r = &self.rows[k];
            return Err(LakeError::AuditFailed {
                step: r.step,
                t: r.t,
                reason: format!("lhs {:.6e} > rhs {:.6e} (1 + {})", r.lhs, r.rhs, self.tol),
            });
        }
        if let Some(r) = self
            .rows
            .iter()
            .find(|r| r.w_norm * r.w_norm > r.envelope * (1.0 + self.tol))
        {
            return Err(LakeError::AuditFailed {
                step: r.step,
                t: r.t,
                reason: format!("||w||^2 = {:.6e} above envelope {:.6e}", r.w_norm * r.w_norm, r.envelope),
            });
        }
        Ok(())
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(f, "t,lhs,rhs,envelope,w_norm")?;
        for r in &self.rows {
            writeln!(f, "{},{},{},{},{}", r.t, r.lhs, r.rhs, r.envelope, r.w_norm)?;
        }
        f.flush()?;
        Ok(())
    }
}

/// Sup of the Frobenius norm of `grad u` and `||u||^2_{H1}` over interior
/// nodes.
fn gradient_stats(ops: &ViscousOps, psi: &[f64]) -> (f64, f64) {
    let grid = ops.grid();
    let u = ops.velocity_field(psi, 0.0);
    let jac = velocity_jacobians(&u);
    let mut sup = 0.0f64;
    let mut h1 = 0.0;
    for (i, j) in jac.iter().enumerate() {
        let v = u.at(i);
        let mut s = v[0] * v[0] + v[1] * v[1];
        if let Some(j) = j {
            let g2 = j[0][0].powi(2) + j[0][1].powi(2) + j[1][0].powi(2) + j[1][1].powi(2);
            sup = sup.max(g2.sqrt());
            s += g2;
        }
        h1 += grid.weight(i) * s;
    }
    (sup, h1)
}

pub fn energy_audit(
    ops: &ViscousOps,
    traj: &ViscousTrajectory,
    reference: &ReferenceFlow,
    tol: f64,
) -> Result<EnergyAudit> {
    let states = traj.step_psi.as_ref().ok_or_else(|| {
        LakeError::InvalidConfig("energy audit needs a trajectory run with keep_steps".into())
    })?;
    let cfg = &traj.config;
    let (mu, drag) = (cfg.mu, cfg.drag());
    // the shore term is absent when the depth vanishes there
    let shore_scale = if ops.grid().domain().shore_depth() > 0.0 {
        cfg.eta * cfg.mu.powf(1.0 - cfg.beta)
    } else {
        0.0
    };
    let rate = mu + shore_scale;

    let n = states.len();
    let mut w_sq = Vec::with_capacity(n);
    let mut quarter_k = Vec::with_capacity(n);
    let mut grad = Vec::with_capacity(n);
    let mut h1 = Vec::with_capacity(n);
    let mut lhs_visc = Vec::with_capacity(n);
    for (k, psi) in states.iter().enumerate() {
        let ubar = reference.at(traj.steps[k].t);
        let w: Vec<f64> = psi.iter().zip(&ubar).map(|(a, b)| a - b).collect();
        w_sq.push(ops.mass(&w));
        let shifted: Vec<f64> = w.iter().zip(&ubar).map(|(a, b)| a + 0.5 * b).collect();
        lhs_visc.push(ops.dissipation(&shifted, mu, drag));
        quarter_k.push(0.25 * ops.dissipation(&ubar, mu, drag));
        let (g, norm) = gradient_stats(ops, &ubar);
        grad.push(g);
        h1.push(norm);
    }

    let c_empirical = (0..n)
        .filter(|&k| rate > 0.0 && h1[k] > 0.0)
        .map(|k| quarter_k[k] / (rate * h1[k]))
        .fold(0.0, f64::max);

    let mut rows = Vec::with_capacity(n);
    let mut first_violation = None;
    let mut envelope_pass = true;
    let (mut grad_int, mut h1_int) = (0.0, 0.0);
    for k in 0..n {
        let t = traj.steps[k].t;
        if k > 0 {
            let dt = t - traj.steps[k - 1].t;
            grad_int += 0.5 * dt * (grad[k] + grad[k - 1]);
            h1_int += 0.5 * dt * (h1[k] + h1[k - 1]);
        }
        let envelope = (w_sq[0] + 2.0 * rate * c_empirical * h1_int) * (2.0 * grad_int).exp();
        let (lhs, rhs) = if k == 0 {
            (0.0, 0.0)
        } else {
            let dt = t - traj.steps[k - 1].t;
            let g = grad[k].max(grad[k - 1]);
            (
                0.5 * (w_sq[k] - w_sq[k - 1]) / dt + lhs_visc[k],
                quarter_k[k] + g * w_sq[k].max(w_sq[k - 1]),
            )
        };
        if k > 0 && first_violation.is_none() && lhs > rhs * (1.0 + tol) {
            first_violation = Some(rows.len());
        }
        if w_sq[k] > envelope * (1.0 + tol) {
            envelope_pass = false;
        }
        rows.push(AuditRow {
            step: k,
            t,
            lhs,
            rhs,
            envelope,
            w_norm: w_sq[k].max(0.0).sqrt(),
        });
    }
    Ok(EnergyAudit {
        tol,
        rows,
        first_violation,
        envelope_pass,
        c_empirical,
        grad_integral: grad_int,
    })
}

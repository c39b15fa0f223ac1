//! Vanishing-viscosity study: viscous runs against one inviscid reference
//! over a list of viscosities, with the rate fit and energy audits.

use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::elliptic::regularity::{regularity_report, RegularityOptions, RegularityReport};
use crate::elliptic::stream::StreamSolver;
use crate::error::{LakeError, Result};
use crate::geometry::field::{weighted_norm, ScalarField, VectorField, WeightMode};
use crate::geometry::domain::LakeDomain;
use crate::geometry::grid::Grid;
use crate::initial::Bump;
use crate::transport::picard::velocity_of;
use crate::transport::{run_inviscid, InviscidConfig, InviscidTrajectory};
use crate::viscous::audit::{energy_audit, EnergyAudit, ReferenceFlow};
use crate::viscous::step::{run_viscous, ViscousConfig};
use crate::viscous::ViscousOps;

/// `||u_a - u_b||_{L2_b}`.
pub fn compare_fields(u_a: &VectorField, u_b: &VectorField) -> Result<f64> {
    weighted_norm(&u_a.sub(u_b)?, 2.0, WeightMode::B)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    /// RMS of the log residuals.
    pub residual: f64,
}

/// Least squares of `ln error` against `ln mu`.
pub fn fit_rate(errors: &[f64], mus: &[f64]) -> Result<RateFit> {
    if errors.len() != mus.len() {
        return Err(LakeError::InvalidConfig("errors and mu lists differ in length".into()));
    }
    if errors.len() < 3 {
        return Err(LakeError::FitUnderdetermined(errors.len()));
    }
    for (&e, &mu) in errors.iter().zip(mus) {
        if !(e > 0.0) {
            return Err(LakeError::NonpositiveError { mu, value: e });
        }
        if !(mu > 0.0) {
            return Err(LakeError::InvalidConfig(format!("mu must be positive, got {mu}")));
        }
    }
    let xs: Vec<f64> = mus.iter().map(|m| m.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(LakeError::InvalidConfig("rate fit needs distinct mu values".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    Ok(RateFit {
        slope,
        intercept,
        residual,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    /// Strictly decreasing viscosities.
    pub mu_list: Vec<f64>,
    pub beta: f64,
    pub eta: f64,
    pub horizon: f64,
    /// Equal intervals over `[0, T]` at which errors are sampled.
    pub snapshots: usize,
    pub audit_tol: f64,
    /// Numerics of the viscous runs; `mu`, `eta` and `beta` are overridden.
    pub viscous: ViscousConfig,
    /// Numerics of the reference run; `horizon` and `snapshots` are overridden.
    pub inviscid: InviscidConfig,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            mu_list: vec![1e-2, 3e-3, 1e-3, 3e-4, 1e-4],
            beta: 0.0,
            eta: 1.0,
            horizon: 1.0,
            snapshots: 50,
            audit_tol: 0.1,
            viscous: ViscousConfig::default(),
            inviscid: InviscidConfig::default(),
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.mu_list.is_empty() || self.mu_list.iter().any(|m| !(*m > 0.0 && m.is_finite())) {
            return Err(LakeError::InvalidConfig("mu_list needs positive finite values".into()));
        }
        if self.mu_list.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(LakeError::InvalidConfig("mu_list must be strictly decreasing".into()));
        }
        if !(self.horizon > 0.0) || self.snapshots == 0 || !(self.audit_tol >= 0.0) {
            return Err(LakeError::InvalidConfig(
                "horizon, snapshots and audit_tol must be positive".into(),
            ));
        }
        self.viscous_for(self.mu_list[0]).validate()
    }

    pub fn viscous_for(&self, mu: f64) -> ViscousConfig {
        ViscousConfig {
            mu,
            eta: self.eta,
            beta: self.beta,
            keep_steps: true,
            ..self.viscous
        }
    }

    fn inviscid_config(&self) -> InviscidConfig {
        InviscidConfig {
            horizon: self.horizon,
            snapshots: self.snapshots,
            ..self.inviscid
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MuResult {
    pub mu: f64,
    pub eta_mu: f64,
    pub dt: f64,
    pub times: Vec<f64>,
    /// `||u^mu(t) - u(t)||_{L2_b}` at the snapshot times.
    pub errors: Vec<f64>,
    pub sup_error: f64,
    pub max_energy_increase: f64,
    pub audit_pass: bool,
    pub envelope_pass: bool,
    pub audit: EnergyAudit,
}

#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    /// SHA-256 of the configuration, grid and initial vorticity.
    pub config_hash: String,
    pub resolution: usize,
    pub h: f64,
    pub alpha: f64,
    pub snapshots: usize,
    pub dt: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub mu_list: Vec<f64>,
    pub beta: f64,
    pub eta: f64,
    pub horizon: f64,
    pub results: Vec<MuResult>,
    /// Viscosities used in the fit (the smallest two thirds).
    pub fit_mu: Vec<f64>,
    pub fit: Option<RateFit>,
    pub notes: Vec<String>,
    pub provenance: Provenance,
}

impl SweepReport {
    pub fn fitted_slope(&self) -> Option<f64> {
        self.fit.map(|f| f.slope)
    }

    pub fn sup_errors(&self) -> Vec<f64> {
        self.results.iter().map(|r| r.sup_error).collect()
    }

    pub fn audits_pass(&self) -> bool {
        self.results.iter().all(|r| r.audit_pass && r.envelope_pass)
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let f = std::io::BufWriter::new(std::fs::File::create(path)?);
        serde_json::to_writer_pretty(f, self).map_err(|e| LakeError::Format(e.to_string()))
    }

    /// One row per viscosity: `mu, eta_mu, sup_error, in_fit, audit_pass,
    /// envelope_pass, fitted_slope`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(f, "mu,eta_mu,sup_error,in_fit,audit_pass,envelope_pass,fitted_slope")?;
        let slope = self.fitted_slope().map_or(String::new(), |s| s.to_string());
        for r in &self.results {
            writeln!(
                f,
                "{},{},{},{},{},{},{}",
                r.mu,
                r.eta_mu,
                r.sup_error,
                self.fit_mu.contains(&r.mu),
                r.audit_pass,
                r.envelope_pass,
                slope
            )?;
        }
        f.flush()?;
        Ok(())
    }
}

/// Shared pieces of a sweep: the reference run and the viscous operators.
pub struct SweepContext {
    pub ops: ViscousOps,
    pub inviscid: InviscidTrajectory,
    pub reference: ReferenceFlow,
}

impl SweepContext {
    pub fn new(grid: &Arc<Grid>, omega0: &ScalarField, cfg: &SweepConfig) -> Result<Self> {
        cfg.validate()?;
        let ops = ViscousOps::new(grid)?;
        let solver = StreamSolver::new(grid)?;
        let inviscid = run_inviscid(&solver, omega0, &cfg.inviscid_config())?;
        let reference = ReferenceFlow::from_inviscid(&inviscid)?;
        Ok(SweepContext {
            ops,
            inviscid,
            reference,
        })
    }

    pub fn initial_stream(&self) -> &ScalarField {
        &self.inviscid.snapshots[0].psi
    }

    /// Viscous run from `psi0` compared with the reference at every snapshot.
    pub fn run_mu(&self, mu: f64, psi0: &ScalarField, cfg: &SweepConfig) -> Result<MuResult> {
        let vcfg = cfg.viscous_for(mu);
        let traj = run_viscous(&self.ops, psi0, cfg.horizon, cfg.snapshots, &vcfg)?;
        let mut times = Vec::with_capacity(traj.snapshots.len());
        let mut errors = Vec::with_capacity(traj.snapshots.len());
        for (s, r) in traj.snapshots.iter().zip(&self.inviscid.snapshots) {
            if (s.t - r.state.t).abs() > 1e-9 * cfg.horizon {
                return Err(LakeError::InvalidConfig(format!(
                    "snapshot times differ: {} vs {}",
                    s.t, r.state.t
                )));
            }
            times.push(s.t);
            errors.push(compare_fields(&s.u, &r.u)?);
        }
        let audit = energy_audit(&self.ops, &traj, &self.reference, cfg.audit_tol)?;
        Ok(MuResult {
            mu,
            eta_mu: vcfg.eta_mu(),
            dt: traj.dt,
            sup_error: errors.iter().copied().fold(0.0, f64::max),
            times,
            errors,
            max_energy_increase: traj.max_energy_increase(),
            audit_pass: audit.first_violation.is_none(),
            envelope_pass: audit.envelope_pass,
            audit,
        })
    }
}

fn config_hash(grid: &Grid, omega0: &ScalarField, cfg: &SweepConfig) -> String {
    let mut hasher = Sha256::new();
    hasher.update(serde_json::to_vec(cfg).expect("config serializes"));
    hasher.update(grid.resolution().to_le_bytes());
    hasher.update(grid.domain().alpha().to_le_bytes());
    hasher.update(grid.domain().family().as_bytes());
    for v in omega0.values() {
        hasher.update(v.to_le_bytes());
    }
    hex::encode(hasher.finalize())
}

/// Runs the reference once and one viscous run per viscosity, in parallel.
pub fn viscosity_sweep(grid: &Arc<Grid>, omega0: &ScalarField, cfg: &SweepConfig) -> Result<SweepReport> {
    let ctx = SweepContext::new(grid, omega0, cfg)?;
    let psi0 = ctx.initial_stream().clone();
    let results = cfg
        .mu_list
        .par_iter()
        .map(|&mu| ctx.run_mu(mu, &psi0, cfg))
        .collect::<Result<Vec<_>>>()?;

    let mut notes = Vec::new();
    let take = (2 * cfg.mu_list.len()).div_ceil(3);
    let tail = &results[results.len() - take..];
    let mut fit_mu = Vec::new();
    let mut fit_err = Vec::new();
    for r in tail {
        if r.sup_error > 0.0 {
            fit_mu.push(r.mu);
            fit_err.push(r.sup_error);
        } else {
            notes.push(format!("mu = {:e}: exact agreement, excluded from the fit", r.mu));
        }
    }
    let fit = match fit_rate(&fit_err, &fit_mu) {
        Ok(f) => Some(f),
        Err(LakeError::FitUnderdetermined(k)) => {
            notes.push(format!("rate fit skipped: {k} usable points, need 3"));
            None
        }
        Err(e) => return Err(e),
    };
    Ok(SweepReport {
        mu_list: cfg.mu_list.clone(),
        beta: cfg.beta,
        eta: cfg.eta,
        horizon: cfg.horizon,
        provenance: Provenance {
            config_hash: config_hash(grid, omega0, cfg),
            resolution: grid.resolution(),
            h: grid.h(),
            alpha: grid.domain().alpha(),
            snapshots: cfg.snapshots,
            dt: results.iter().map(|r| r.dt).collect(),
        },
        results,
        fit_mu,
        fit,
        notes,
    })
}

/// Stream function of a unit `L2_b` divergence-free perturbation: the flow
/// of the off-centre bump, normalized.
pub fn perturbation_direction(ops: &ViscousOps) -> Result<ScalarField> {
    let grid = ops.grid();
    let solver = ops.solver();
    let w = Bump::offset().sample(grid)?;
    let (psi, u) = velocity_of(solver, &w, 1e-12, None)?;
    let norm = weighted_norm(&u, 2.0, WeightMode::B)?;
    Ok(psi.scaled(1.0 / norm))
}

#[derive(Debug, Clone, Serialize)]
pub struct PerturbationRow {
    pub mu: f64,
    pub sup_error: f64,
    pub perturbed_sup_error: f64,
    pub shift: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PerturbationReport {
    pub eps: f64,
    /// `int_0^T ||grad u||_inf` of the reference flow.
    pub grad_integral: f64,
    /// `eps exp(2 int ||grad u||_inf)`.
    pub bound: f64,
    pub rows: Vec<PerturbationRow>,
    pub max_shift: f64,
}

impl PerturbationReport {
    pub fn passes(&self, slack: f64) -> bool {
        self.max_shift <= self.bound * slack
    }
}

/// Repeats the sweep from `u_0 + eps v` and records how far the sup errors
/// move.
pub fn initial_data_perturbation(
    grid: &Arc<Grid>,
    omega0: &ScalarField,
    cfg: &SweepConfig,
    eps: f64,
) -> Result<PerturbationReport> {
    if !(eps > 0.0) {
        return Err(LakeError::InvalidConfig("eps must be positive".into()));
    }
    let ctx = SweepContext::new(grid, omega0, cfg)?;
    let psi0 = ctx.initial_stream().clone();
    let v = perturbation_direction(&ctx.ops)?;
    let psi_p = psi0.axpy(eps, &v)?;
    let pairs = cfg
        .mu_list
        .par_iter()
        .map(|&mu| Ok((ctx.run_mu(mu, &psi0, cfg)?, ctx.run_mu(mu, &psi_p, cfg)?)))
        .collect::<Result<Vec<_>>>()?;
    let grad_integral = pairs[0].0.audit.grad_integral;
    let rows: Vec<PerturbationRow> = pairs
        .iter()
        .map(|(a, b)| PerturbationRow {
            mu: a.mu,
            sup_error: a.sup_error,
            perturbed_sup_error: b.sup_error,
            shift: (b.sup_error - a.sup_error).abs(),
        })
        .collect();
    Ok(PerturbationReport {
        eps,
        grad_integral,
        bound: eps * (2.0 * grad_integral).exp(),
        max_shift: rows.iter().map(|r| r.shift).fold(0.0, f64::max),
        rows,
    })
}

fn cubic_bump(x: [f64; 2], c: [f64; 2], r: f64) -> f64 {
    let q = ((x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2)) / (r * r);
    if q < 1.0 {
        (1.0 - q).powi(3)
    } else {
        0.0
    }
}

/// Five sources of decreasing smoothness: constant, patch, offset bump,
/// modulated bump and a half-plane step.
pub fn source_battery(grid: &Arc<Grid>) -> Vec<ScalarField> {
    vec![
        ScalarField::from_fn(grid, "constant", |_| 1.0),
        ScalarField::from_fn(grid, "patch", |x| (x[0].hypot(x[1]) <= 0.5) as u8 as f64),
        ScalarField::from_fn(grid, "offset_bump", |x| cubic_bump(x, [0.3, 0.0], 0.4)),
        ScalarField::from_fn(grid, "modulated", |x| {
            cubic_bump(x, [0.0, 0.0], 0.6) * (8.0 * x[0]).sin()
        }),
        ScalarField::from_fn(grid, "half_plane", |x| if x[1] > 0.0 { -1.0 } else { 0.5 }),
    ]
}

pub const OSCILLATION_WAVENUMBERS: [f64; 4] = [4.0, 8.0, 16.0, 32.0];

#[derive(Debug, Clone, Serialize)]
pub struct SourceRegularity {
    pub source: String,
    pub report: RegularityReport,
    /// `max_p ||grad u||_p / p` over `(||grad u||_2 / 2)`.
    pub p_norm_spread: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RegularityAudit {
    pub resolution: usize,
    pub seed: u64,
    pub battery: Vec<SourceRegularity>,
    /// Patch-source modulus at `n / 2` and `n`.
    pub loglip_coarse: f64,
    pub loglip_fine: f64,
    pub loglip_ratio: f64,
    /// `(k, c1_interior, c1_interior / ln(2 + k))` for `bump * sin(k x)`.
    pub c1_growth: Vec<(f64, f64, f64)>,
    pub p_norm_pass: bool,
    pub loglip_pass: bool,
    pub c1_pass: bool,
}

impl RegularityAudit {
    pub fn passed(&self) -> bool {
        self.p_norm_pass && self.loglip_pass && self.c1_pass
    }
}

/// Regularity quantities over the source battery, the refinement stability of
/// the log-Lipschitz modulus, and the interior gradient growth under
/// oscillating sources.
pub fn regularity_audit(domain: &LakeDomain, n: usize, opts: RegularityOptions) -> Result<RegularityAudit> {
    let grid = Grid::build(domain, n)?;
    let solver = StreamSolver::new(&grid)?;
    let tol = 1e-10;
    let battery = source_battery(&grid)
        .into_iter()
        .map(|f| {
            let s = solver.solve(&f, tol)?;
            let report = regularity_report(&s, opts);
            let g2 = report.grad_p_norms[0].1;
            let worst = report.grad_p_norms.iter().map(|v| v.1).fold(0.0, f64::max);
            Ok(SourceRegularity {
                source: f.name.clone(),
                p_norm_spread: if g2 > 0.0 { worst / g2 } else { 1.0 },
                report,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let p_norm_pass = battery.iter().all(|s| s.p_norm_spread <= 2.0);

    let patch_modulus = |g: &Arc<Grid>| -> Result<f64> {
        let f = ScalarField::from_fn(g, "patch", |x| (x[0].hypot(x[1]) <= 0.5) as u8 as f64);
        let s = StreamSolver::new(g)?.solve(&f, tol)?;
        Ok(regularity_report(&s, opts).loglip_modulus)
    };
    let loglip_coarse = patch_modulus(&Grid::build(domain, n / 2)?)?;
    let loglip_fine = patch_modulus(&grid)?;
    let loglip_ratio = loglip_fine / loglip_coarse;

    let mut c1_growth = Vec::new();
    for k in OSCILLATION_WAVENUMBERS {
        let f = ScalarField::from_fn(&grid, "fk", |x| cubic_bump(x, [0.0, 0.0], 0.6) * (k * x[0]).sin());
        let s = solver.solve(&f, tol)?;
        let c1 = regularity_report(&s, opts).c1_interior;
        c1_growth.push((k, c1, c1 / (2.0 + k).ln()));
    }
    let rho0 = c1_growth[0].2;
    let c1_pass = c1_growth.iter().all(|r| r.2 <= 1.5 * rho0);

    Ok(RegularityAudit {
        resolution: n,
        seed: opts.seed,
        battery,
        loglip_coarse,
        loglip_fine,
        loglip_ratio,
        c1_growth,
        p_norm_pass,
        loglip_pass: (0.7..=1.3).contains(&loglip_ratio),
        c1_pass,
    })
}

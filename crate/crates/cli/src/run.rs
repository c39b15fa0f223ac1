//! Experiment dispatch. Every run writes `report.json`, `manifest.json` and
//! experiment-specific fields and CSV files into the output directory.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use lakesim_core::elliptic::green::{assemble_green_solution, green_check};
use lakesim_core::elliptic::regularity::RegularityOptions as CoreRegularity;
use lakesim_core::elliptic::stream::StreamSolver;
use lakesim_core::experiments::{regularity_audit, viscosity_sweep, SweepConfig};
use lakesim_core::geometry::io::{write_scalar, write_vector};
use lakesim_core::initial::Bump;
use lakesim_core::transport::picard::{velocity_of, PicardConfig};
use lakesim_core::transport::{conservation_report, run_inviscid, InviscidConfig};
use lakesim_core::viscous::{run_viscous, ViscousConfig, ViscousOps};
use lakesim_core::{Grid, LakeDomain, LakeError, ScalarField};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::{RunConfig, Source};
use crate::error::CliError;
use crate::Experiment;

pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    pub passed: bool,
}

impl Check {
    fn at_most(name: &str, value: f64, limit: f64) -> Self {
        Check {
            name: name.into(),
            value,
            limit,
            passed: value <= limit,
        }
    }

    fn flag(name: &str, passed: bool) -> Self {
        Check {
            name: name.into(),
            value: passed as u8 as f64,
            limit: 1.0,
            passed,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub out_dir: PathBuf,
    pub report: Value,
    pub checks: Vec<Check>,
    pub files: Vec<String>,
}

struct Artifacts {
    dir: PathBuf,
    files: Vec<String>,
}

impl Artifacts {
    fn path(&mut self, name: &str) -> Result<PathBuf, CliError> {
        let p = self.dir.join(name);
        if let Some(parent) = p.parent() {
            std::fs::create_dir_all(parent).map_err(|e| io_err(parent, e))?;
        }
        self.files.push(name.to_string());
        Ok(p)
    }

    fn json(&mut self, name: &str, value: &impl Serialize) -> Result<(), CliError> {
        let p = self.path(name)?;
        let text = serde_json::to_string_pretty(value).expect("reports serialize");
        std::fs::write(&p, text + "\n").map_err(|e| io_err(&p, e))
    }

    fn text(&mut self, name: &str, body: &str) -> Result<(), CliError> {
        let p = self.path(name)?;
        std::fs::write(&p, body).map_err(|e| io_err(&p, e))
    }

    fn scalar(&mut self, name: &str, f: &ScalarField) -> Result<(), CliError> {
        let p = self.path(name)?;
        write_scalar(&p, f).map_err(|e| lake_io(&p, e))
    }

    fn vector(&mut self, name: &str, f: &lakesim_core::VectorField) -> Result<(), CliError> {
        let p = self.path(name)?;
        write_vector(&p, f).map_err(|e| lake_io(&p, e))
    }

    /// Lets a core writer create the file and records it.
    fn with(&mut self, name: &str, write: impl FnOnce(&Path) -> lakesim_core::Result<()>) -> Result<(), CliError> {
        let p = self.path(name)?;
        write(&p).map_err(|e| lake_io(&p, e))
    }
}

fn io_err(path: &Path, source: std::io::Error) -> CliError {
    CliError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn lake_io(path: &Path, e: LakeError) -> CliError {
    match e {
        LakeError::Io(msg) => io_err(path, std::io::Error::other(msg)),
        other => CliError::Io {
            path: path.display().to_string(),
            source: std::io::Error::other(other.to_string()),
        },
    }
}

/// Comma-separated rows; floats use the shortest round-trip form.
fn csv(header: &str, rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut s = String::new();
    writeln!(s, "{header}").unwrap();
    for r in rows {
        writeln!(s, "{}", r.join(",")).unwrap();
    }
    s
}

fn opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |x| x.to_string())
}

pub fn config_hash(cfg: &RunConfig) -> String {
    hex::encode(Sha256::digest(serde_json::to_vec(cfg).expect("config serializes")))
}

/// Validates the config, runs the experiment and writes its artifacts. On
/// any failure after the output directory exists, `failure.json` is written
/// there as well.
pub fn run_experiment(experiment: Experiment, cfg: &RunConfig, out: &Path) -> Result<RunOutcome, CliError> {
    cfg.validate(experiment)?;
    let mut cfg = cfg.clone();
    cfg.experiment = Some(experiment);
    std::fs::create_dir_all(out).map_err(|e| io_err(out, e))?;
    let mut art = Artifacts {
        dir: out.to_path_buf(),
        files: Vec::new(),
    };
    let started = Instant::now();
    let result = dispatch(experiment, &cfg, &mut art).and_then(|(operation, body, checks)| {
        let failed: Vec<String> = checks.iter().filter(|c| !c.passed).map(|c| c.name.clone()).collect();
        let report = json!({
            "experiment": experiment.name(),
            "operation": operation,
            "config_hash": config_hash(&cfg),
            "seed": cfg.seed,
            "resolution": cfg.resolution(),
            "passed": failed.is_empty(),
            "checks": checks,
            "result": body,
        });
        art.json("report.json", &report)?;
        Ok((report, checks, failed))
    });
    let elapsed = started.elapsed().as_secs_f64();
    let status = match &result {
        Ok((_, _, failed)) if failed.is_empty() => "ok",
        _ => "failed",
    };
    let manifest = json!({
        "manifest_version": MANIFEST_VERSION,
        "experiment": experiment.name(),
        "status": status,
        "config": cfg,
        "versions": {
            "lakesim-cli": env!("CARGO_PKG_VERSION"),
            "lakesim-core": lakesim_core::VERSION,
        },
        "timings": { "total_seconds": elapsed },
        "files": art.files,
    });
    let write_manifest = |art: &mut Artifacts| art.json("manifest.json", &manifest);
    match result {
        Ok((report, checks, failed)) => {
            write_manifest(&mut art)?;
            if failed.is_empty() {
                Ok(RunOutcome {
                    out_dir: out.to_path_buf(),
                    report,
                    checks,
                    files: art.files,
                })
            } else {
                let err = CliError::ChecksFailed {
                    experiment: experiment.name(),
                    checks: failed,
                };
                art.json("failure.json", &err.record())?;
                Err(err)
            }
        }
        Err(err) => {
            // the manifest and failure record are best effort after an error
            let _ = write_manifest(&mut art);
            let _ = art.json("failure.json", &err.record());
            Err(err)
        }
    }
}

type Dispatched = (&'static str, Value, Vec<Check>);

fn dispatch(experiment: Experiment, cfg: &RunConfig, art: &mut Artifacts) -> Result<Dispatched, CliError> {
    let name = experiment.name();
    let ctx = |source: LakeError| CliError::Run {
        experiment: name,
        source,
    };
    let domain = LakeDomain::build(&cfg.domain).map_err(ctx)?;
    match experiment {
        Experiment::SolveElliptic => solve_elliptic(cfg, &domain, art, &ctx),
        Experiment::GreenCheck => green(cfg, &domain, art, &ctx),
        Experiment::RunInviscid => inviscid(cfg, &domain, art, &ctx),
        Experiment::RunViscous => viscous(cfg, &domain, art, &ctx),
        Experiment::Sweep => sweep(cfg, &domain, art, &ctx),
        Experiment::RegularityAudit => regularity(cfg, &domain, art, &ctx),
    }
}

type Ctx<'a> = &'a dyn Fn(LakeError) -> CliError;

fn grid_for(cfg: &RunConfig, domain: &LakeDomain, ctx: Ctx) -> Result<Arc<Grid>, CliError> {
    Grid::build(domain, cfg.resolution()).map_err(ctx)
}

/// Radial closed form for a constant source on the disk:
/// `psi = -f c0 (1 - r^2)^(alpha + 1) / (4 (alpha + 1))`.
fn disk_closed_form(domain: &LakeDomain, value: f64, x: [f64; 2]) -> f64 {
    let a = domain.alpha();
    let c0 = domain.bathymetry().c0;
    let q = (1.0 - x[0] * x[0] - x[1] * x[1]).max(0.0);
    -value * c0 * q.powf(a + 1.0) / (4.0 * (a + 1.0))
}

fn solve_elliptic(cfg: &RunConfig, domain: &LakeDomain, art: &mut Artifacts, ctx: Ctx) -> Result<Dispatched, CliError> {
    let grid = grid_for(cfg, domain, ctx)?;
    let f = cfg.physics.source.sample(&grid).map_err(ctx)?;
    let sol = StreamSolver::new(&grid)
        .and_then(|s| s.solve(&f, cfg.numerics.tol_solve))
        .map_err(ctx)?;
    art.scalar("fields/f.bin", &f)?;
    art.scalar("fields/psi.bin", &sol.psi)?;
    art.vector("fields/u.bin", &sol.u)?;
    let closed_form_error = match cfg.physics.source {
        Source::Constant { value } if domain.is_disk() => Some(
            (0..grid.interior_count())
                .map(|i| (sol.psi.at(i) - disk_closed_form(domain, value, grid.node_pos(i))).abs())
                .fold(0.0, f64::max),
        ),
        _ => None,
    };
    let summary = sol.summary();
    let checks = vec![Check::at_most("relative_residual", summary.residual, cfg.numerics.tol_solve)];
    Ok((
        "solve_stream",
        json!({ "summary": summary, "closed_form_max_error": closed_form_error }),
        checks,
    ))
}

fn green(cfg: &RunConfig, domain: &LakeDomain, art: &mut Artifacts, ctx: Ctx) -> Result<Dispatched, CliError> {
    let check = green_check(domain, cfg.green.pairs, cfg.seed);
    let grid = grid_for(cfg, domain, ctx)?;
    let solver = StreamSolver::new(&grid).map_err(ctx)?;
    let f = Bump {
        center: [0.0, 0.0],
        radius: cfg.green.source_radius,
        power: 3,
        amplitude: 1.0,
    }
    .sample(&grid)
    .map_err(ctx)?;
    let tol = cfg.numerics.tol_solve;
    let direct = solver.solve(&f, tol).map_err(ctx)?.psi;
    let assembled = assemble_green_solution(&solver, &f, cfg.green.delta, tol).map_err(ctx)?;
    let decomposition = assembled.sub(&direct).map_err(ctx)?.max_abs() / direct.max_abs().max(f64::MIN_POSITIVE);
    art.scalar("fields/psi_direct.bin", &direct)?;
    art.scalar("fields/psi_green.bin", &assembled)?;
    let checks = vec![
        Check::at_most("identity_max_deviation", check.identity_max_deviation, 1e-12),
        Check::at_most("symmetry_max_deviation", check.symmetry_max_deviation, 1e-12),
        Check::at_most("decomposition_relative_difference", decomposition, 5e-2),
    ];
    Ok((
        "green_check+assemble_green_solution",
        json!({ "pairs": check, "decomposition_relative_difference": decomposition }),
        checks,
    ))
}

fn inviscid_config(cfg: &RunConfig) -> InviscidConfig {
    let nm = &cfg.numerics;
    let base = InviscidConfig::default();
    InviscidConfig {
        horizon: cfg.physics.horizon,
        window: nm.window,
        min_window: nm.window / 64.0,
        snapshots: nm.snapshots,
        picard: PicardConfig {
            tol_picard: nm.tol_picard,
            tol_solve: nm.tol_solve,
            ..base.picard
        },
        seed: cfg.seed,
        ..base
    }
}

fn inviscid(cfg: &RunConfig, domain: &LakeDomain, art: &mut Artifacts, ctx: Ctx) -> Result<Dispatched, CliError> {
    let grid = grid_for(cfg, domain, ctx)?;
    let solver = StreamSolver::new(&grid).map_err(ctx)?;
    let w0 = cfg.physics.initial.bump().sample(&grid).map_err(ctx)?;
    let traj = run_inviscid(&solver, &w0, &inviscid_config(cfg)).map_err(ctx)?;
    let rep = conservation_report(&traj);
    for (k, s) in traj.snapshots.iter().enumerate() {
        art.scalar(&format!("fields/omega_{k:04}.bin"), &s.state.omega)?;
        art.vector(&format!("fields/u_{k:04}.bin"), &s.u)?;
    }
    let rows = rep.rows.iter().map(|r| {
        let mut v = vec![r.t.to_string()];
        v.extend(r.lp_drift.iter().map(|d| d.1.to_string()));
        v.extend([
            r.mass_drift.to_string(),
            r.sup_ratio.to_string(),
            opt(r.support_distance),
            r.max_change.to_string(),
        ]);
        v
    });
    art.text(
        "snapshots.csv",
        &csv("t,drift_p1,drift_p2,drift_p4,drift_pinf,mass_drift,sup_ratio,support_distance,max_change", rows),
    )?;
    let windows = traj.windows.iter().map(|w| {
        vec![
            w.a.to_string(),
            w.b.to_string(),
            w.iterates.to_string(),
            w.contraction_ratios.iter().copied().fold(0.0, f64::max).to_string(),
            w.converged.to_string(),
        ]
    });
    art.text("windows.csv", &csv("a,b,iterates,max_ratio,converged", windows))?;
    let checks = vec![
        Check::at_most("sup_ratio", rep.max_sup_ratio, 1.0 + 1e-6),
        Check::flag("support_floor_respected", traj.floor_respected),
    ];
    Ok((
        "run_inviscid",
        json!({
            "conservation": rep,
            "windows": traj.windows,
            "rejected_windows": traj.rejected,
            "initial_support_distance": traj.initial_support_distance,
            "min_support_distance": traj.min_support_distance,
            "loglip_modulus": traj.loglip_modulus,
            "support_floor": traj.support_floor,
        }),
        checks,
    ))
}

fn viscous_config(cfg: &RunConfig, mu: f64) -> ViscousConfig {
    let nm = &cfg.numerics;
    ViscousConfig {
        mu,
        eta: cfg.physics.eta,
        beta: cfg.physics.beta,
        theta: nm.theta,
        dt: nm.dt,
        cfl: nm.cfl,
        tol_solve: nm.tol_solve,
        tol_fixed: nm.tol_fixed,
        ..ViscousConfig::default()
    }
}

fn viscous(cfg: &RunConfig, domain: &LakeDomain, art: &mut Artifacts, ctx: Ctx) -> Result<Dispatched, CliError> {
    let grid = grid_for(cfg, domain, ctx)?;
    let ops = ViscousOps::new(&grid).map_err(ctx)?;
    let w0 = cfg.physics.initial.bump().sample(&grid).map_err(ctx)?;
    let (psi0, _) = velocity_of(ops.solver(), &w0, cfg.numerics.tol_solve, None).map_err(ctx)?;
    let vcfg = viscous_config(cfg, cfg.physics.mu);
    let traj = run_viscous(&ops, &psi0, cfg.physics.horizon, cfg.numerics.snapshots, &vcfg).map_err(ctx)?;
    for (k, s) in traj.snapshots.iter().enumerate() {
        art.scalar(&format!("fields/psi_{k:04}.bin"), &s.psi)?;
        art.vector(&format!("fields/u_{k:04}.bin"), &s.u)?;
    }
    let rows = traj.steps.iter().map(|s| {
        vec![
            s.t.to_string(),
            s.energy.to_string(),
            s.fixed_iterations.to_string(),
            s.strain_dissipation.to_string(),
            s.dissipation.to_string(),
        ]
    });
    art.text(
        "energy.csv",
        &csv("t,energy,fixed_iterations,strain_dissipation,dissipation", rows),
    )?;
    let increase = traj.max_energy_increase();
    let checks = vec![Check::at_most("max_energy_increase", increase, vcfg.energy_tol)];
    Ok((
        "run_viscous",
        json!({
            "config": traj.config,
            "dt": traj.dt,
            "steps": traj.steps.len(),
            "initial_energy": traj.snapshots[0].kinetic_energy,
            "final_energy": traj.snapshots.last().map(|s| s.kinetic_energy),
            "max_energy_increase": increase,
            "snapshot_times": traj.snapshots.iter().map(|s| s.t).collect::<Vec<_>>(),
        }),
        checks,
    ))
}

pub fn sweep_config(cfg: &RunConfig) -> SweepConfig {
    SweepConfig {
        mu_list: cfg.physics.mu_list.clone(),
        beta: cfg.physics.beta,
        eta: cfg.physics.eta,
        horizon: cfg.physics.horizon,
        snapshots: cfg.numerics.snapshots,
        audit_tol: cfg.numerics.audit_tol,
        viscous: viscous_config(cfg, cfg.physics.mu_list.first().copied().unwrap_or(cfg.physics.mu)),
        inviscid: inviscid_config(cfg),
    }
}

fn sweep(cfg: &RunConfig, domain: &LakeDomain, art: &mut Artifacts, ctx: Ctx) -> Result<Dispatched, CliError> {
    let grid = grid_for(cfg, domain, ctx)?;
    let w0 = cfg.physics.initial.bump().sample(&grid).map_err(ctx)?;
    let scfg = sweep_config(cfg);
    let rep = viscosity_sweep(&grid, &w0, &scfg).map_err(ctx)?;
    art.with("sweep.csv", |p| rep.write_csv(p))?;
    for (k, r) in rep.results.iter().enumerate() {
        art.with(&format!("audit/mu_{k:02}.csv"), |p| r.audit.write_csv(p))?;
        let rows = r.times.iter().zip(&r.errors).map(|(t, e)| vec![t.to_string(), e.to_string()]);
        art.text(&format!("errors/mu_{k:02}.csv"), &csv("t,error", rows))?;
    }
    art.json("sweep.json", &rep)?;
    let mut checks: Vec<Check> = rep
        .results
        .iter()
        .map(|r| Check::flag(&format!("audit_mu_{:e}", r.mu), r.audit_pass && r.envelope_pass))
        .collect();
    checks.extend(
        rep.results
            .iter()
            .map(|r| Check::at_most(&format!("energy_increase_mu_{:e}", r.mu), r.max_energy_increase, 1e-10)),
    );
    let summary = json!({
        "mu_list": rep.mu_list,
        "sup_errors": rep.sup_errors(),
        "fit_mu": rep.fit_mu,
        "fit": rep.fit,
        "notes": rep.notes,
        "provenance": rep.provenance,
    });
    Ok(("viscosity_sweep", summary, checks))
}

fn regularity(cfg: &RunConfig, domain: &LakeDomain, art: &mut Artifacts, ctx: Ctx) -> Result<Dispatched, CliError> {
    let opts = CoreRegularity {
        samples: cfg.regularity.samples,
        k_margin: cfg.regularity.k_margin,
        seed: cfg.seed,
        phi_diag: cfg.regularity.phi_diag,
    };
    let audit = regularity_audit(domain, cfg.resolution(), opts).map_err(ctx)?;
    let rows = audit.battery.iter().map(|s| {
        let mut v = vec![s.source.clone()];
        v.extend(s.report.grad_p_norms.iter().map(|p| p.1.to_string()));
        v.extend([
            s.report.sup_u.to_string(),
            s.report.loglip_modulus.to_string(),
            s.report.c1_interior.to_string(),
        ]);
        v
    });
    art.text(
        "battery.csv",
        &csv("source,grad_p2,grad_p4,grad_p8,grad_p16,grad_p32,sup_u,loglip_modulus,c1_interior", rows),
    )?;
    let spread = audit.battery.iter().map(|s| s.p_norm_spread).fold(0.0, f64::max);
    let rho0 = audit.c1_growth[0].2;
    let rho_max = audit.c1_growth.iter().map(|r| r.2).fold(0.0, f64::max);
    let checks = vec![
        Check::at_most("p_norm_spread", spread, 2.0),
        Check::at_most("loglip_ratio_deviation", (audit.loglip_ratio - 1.0).abs(), 0.3),
        Check::at_most("c1_ratio_growth", rho_max / rho0, 1.5),
    ];
    Ok(("regularity_audit", serde_json::to_value(&audit).expect("audit serializes"), checks))
}

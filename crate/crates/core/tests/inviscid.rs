use std::sync::Arc;

use lakesim_core::elliptic::stream::StreamSolver;
use lakesim_core::initial::Bump;
use lakesim_core::transport::picard::{picard_window, velocity_of, PicardConfig};
use lakesim_core::transport::{conservation_report, run_inviscid, InviscidConfig, VorticityState};
use lakesim_core::{Grid, LakeDomain, LakeError, ScalarField};

fn disk_grid(alpha: f64, n: usize) -> Arc<Grid> {
    Grid::build(&LakeDomain::disk(alpha, 1.0).unwrap(), n).unwrap()
}

#[test]
fn steady_radial_run_stays_put() {
    let g = disk_grid(1.0, 128);
    let solver = StreamSolver::new(&g).unwrap();
    let w0 = Bump::radial().sample(&g).unwrap();
    let cfg = InviscidConfig {
        horizon: 2.0,
        ..Default::default()
    };
    let traj = run_inviscid(&solver, &w0, &cfg).unwrap();
    let rep = conservation_report(&traj);
    assert!(rep.max_change <= 5e-3, "{}", rep.max_change);
    for &(p, d) in &rep.max_lp_drift[..3] {
        assert!(d <= 1e-3, "p={p}: {d}");
    }
    assert!(rep.max_mass_drift <= 1e-3);
    assert!(rep.max_sup_ratio <= 1.0 + 1e-6);
    // only the interpolation error separates the first iterate from the data
    assert!(traj.windows.iter().all(|w| w.iterates <= 3 && w.diffs[0] < 1e-4));
}

#[test]
fn offset_bump_contracts_and_stays_confined() {
    let g = disk_grid(0.0, 128);
    let solver = StreamSolver::new(&g).unwrap();
    let w0 = Bump::offset().sample(&g).unwrap();
    let traj = run_inviscid(&solver, &w0, &InviscidConfig::default()).unwrap();
    let rep = conservation_report(&traj);
    assert!(traj.floor_respected);
    let floor = traj.support_floor.unwrap();
    for s in &traj.snapshots {
        let d = s.state.support_distance.unwrap();
        assert!(d > 0.0 && d >= floor, "{d} < {floor}");
    }
    for w in &traj.windows {
        assert!(w.converged);
        assert!(w.contraction_ratios.iter().all(|&r| r <= 0.75), "{w:?}");
    }
    assert!(rep.max_sup_ratio <= 1.0 + 1e-6 && rep.max_sup_ratio >= 0.98);
    assert!(rep.max_mass_drift <= 1e-2);
    for &(p, d) in &rep.max_lp_drift[..3] {
        assert!(d <= 2e-2, "p={p}: {d}");
    }
}

#[test]
fn halving_the_window_shrinks_the_first_ratio() {
    let g = disk_grid(0.0, 128);
    let solver = StreamSolver::new(&g).unwrap();
    let w0 = Bump::offset().sample(&g).unwrap();
    let cfg = PicardConfig::default();
    let state = VorticityState::new(w0.clone(), 0.0, 1e-10);
    let start = velocity_of(&solver, &w0, cfg.tol_solve, None).unwrap();
    let mut firsts = Vec::new();
    for len in [0.4, 0.2, 0.1] {
        let out = picard_window(&solver, &state, &start, len, &cfg).unwrap();
        assert!(out.window.converged);
        // geometric decay of the sup differences
        assert!(out.window.contraction_ratios.iter().all(|&r| r <= 0.75));
        firsts.push(out.window.contraction_ratios[0]);
    }
    assert!(firsts[1] < firsts[0] && firsts[2] < firsts[1], "{firsts:?}");
}

#[test]
fn zero_vorticity_gives_zero_trajectory() {
    let g = disk_grid(1.0, 48);
    let solver = StreamSolver::new(&g).unwrap();
    let traj = run_inviscid(&solver, &ScalarField::zeros(&g, "w"), &InviscidConfig::default()).unwrap();
    assert!(traj.snapshots.iter().all(|s| s.state.omega.max_abs() == 0.0));
    let rep = conservation_report(&traj);
    assert_eq!(rep.max_change, 0.0);
    assert_eq!(rep.max_mass_drift, 0.0);
}

#[test]
fn rough_or_boundary_touching_data_rejected() {
    let g = disk_grid(1.0, 48);
    let solver = StreamSolver::new(&g).unwrap();
    let patch = ScalarField::from_fn(&g, "w", |x| (x[0].hypot(x[1]) < 0.5) as u8 as f64);
    assert!(matches!(
        run_inviscid(&solver, &patch, &InviscidConfig::default()),
        Err(LakeError::InvalidInitialData(_))
    ));
    let wide = ScalarField::from_fn(&g, "w", |x| 1.0 - x[0] * x[0] - x[1] * x[1]);
    assert!(matches!(
        run_inviscid(&solver, &wide, &InviscidConfig::default()),
        Err(LakeError::InvalidInitialData(_))
    ));
}

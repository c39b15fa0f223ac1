//! Drift of the transported invariants along an inviscid trajectory.

use serde::Serialize;

use super::run::InviscidTrajectory;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConservationRow {
    pub t: f64,
    /// `(p, relative drift of ||b^{1/p} omega||_{L^p})`.
    pub lp_drift: Vec<(f64, f64)>,
    /// `|int b omega(t) - int b omega_0|` relative to `||b omega_0||_{L^1}`.
    pub mass_drift: f64,
    /// `max |omega(t)| / max |omega_0|`.
    pub sup_ratio: f64,
    pub support_distance: Option<f64>,
    /// `max |omega(t) - omega_0|`.
    pub max_change: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConservationReport {
    pub rows: Vec<ConservationRow>,
    /// Worst relative drift per exponent.
    pub max_lp_drift: Vec<(f64, f64)>,
    pub max_mass_drift: f64,
    pub max_sup_ratio: f64,
    pub max_change: f64,
    pub min_support_distance: Option<f64>,
}

fn relative(now: f64, then: f64) -> f64 {
    if then == 0.0 {
        now.abs()
    } else {
        (now - then).abs() / then.abs()
    }
}

pub fn conservation_report(trajectory: &InviscidTrajectory) -> ConservationReport {
    let first = &trajectory.snapshots[0].state;
    let mass0 = first.mass();
    let l1 = first.lp_ledger[0].1;
    let sup0 = first.omega.max_abs();
    let rows: Vec<ConservationRow> = trajectory
        .snapshots
        .iter()
        .map(|s| {
            let st = &s.state;
            ConservationRow {
                t: st.t,
                lp_drift: st
                    .lp_ledger
                    .iter()
                    .zip(&first.lp_ledger)
                    .map(|(now, then)| (now.0, relative(now.1, then.1)))
                    .collect(),
                mass_drift: if l1 == 0.0 {
                    st.mass().abs()
                } else {
                    (st.mass() - mass0).abs() / l1
                },
                sup_ratio: if sup0 == 0.0 {
                    if st.omega.max_abs() == 0.0 { 1.0 } else { f64::INFINITY }
                } else {
                    st.omega.max_abs() / sup0
                },
                support_distance: st.support_distance,
                max_change: st
                    .omega
                    .sub(&first.omega)
                    .map(|d| d.max_abs())
                    .unwrap_or(f64::INFINITY),
            }
        })
        .collect();
    let max_lp_drift = first
        .lp_ledger
        .iter()
        .enumerate()
        .map(|(k, &(p, _))| (p, rows.iter().map(|r| r.lp_drift[k].1).fold(0.0, f64::max)))
        .collect();
    ConservationReport {
        max_lp_drift,
        max_mass_drift: rows.iter().map(|r| r.mass_drift).fold(0.0, f64::max),
        max_sup_ratio: rows.iter().map(|r| r.sup_ratio).fold(0.0, f64::max),
        max_change: rows.iter().map(|r| r.max_change).fold(0.0, f64::max),
        min_support_distance: trajectory.min_support_distance,
        rows,
    }
}

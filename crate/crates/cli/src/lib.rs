//! Configuration, experiment dispatch and artifact writing for `lakesim`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod run;

use serde::{Deserialize, Serialize};

pub use config::{load_config, parse_config, RunConfig};
pub use error::CliError;
pub use run::{run_experiment, RunOutcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    SolveElliptic,
    GreenCheck,
    RunInviscid,
    RunViscous,
    Sweep,
    RegularityAudit,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::SolveElliptic => "solve-elliptic",
            Experiment::GreenCheck => "green-check",
            Experiment::RunInviscid => "run-inviscid",
            Experiment::RunViscous => "run-viscous",
            Experiment::Sweep => "sweep",
            Experiment::RegularityAudit => "regularity-audit",
        }
    }
}

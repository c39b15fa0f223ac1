//! Run configuration: strict JSON with documented defaults.

use std::path::Path;

use lakesim_core::initial::Bump;
use lakesim_core::{DomainConfig, ScalarField};
use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::Experiment;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// When present it must match the experiment named on the command line.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub experiment: Option<Experiment>,
    pub domain: DomainConfig,
    pub numerics: Numerics,
    pub physics: Physics,
    pub green: GreenOptions,
    pub regularity: RegularityOptions,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            experiment: None,
            domain: DomainConfig::disk(0.0),
            numerics: Numerics::default(),
            physics: Physics::default(),
            green: GreenOptions::default(),
            regularity: RegularityOptions::default(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Numerics {
    /// Lattice cells across the bounding box; overrides `domain.resolution`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    /// Viscous time step; `None` derives it from the CFL number.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    pub cfl: f64,
    pub tol_solve: f64,
    pub tol_picard: f64,
    pub tol_fixed: f64,
    pub audit_tol: f64,
    /// Equal intervals over `[0, T]` between stored snapshots.
    pub snapshots: usize,
    /// Initial Picard window length.
    pub window: f64,
    pub theta: f64,
}

impl Default for Numerics {
    fn default() -> Self {
        Numerics {
            n: None,
            dt: None,
            cfl: 0.5,
            tol_solve: 1e-11,
            tol_picard: 1e-8,
            tol_fixed: 1e-13,
            audit_tol: 0.1,
            snapshots: 20,
            window: 0.125,
            theta: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Physics {
    pub mu: f64,
    pub mu_list: Vec<f64>,
    pub eta: f64,
    pub beta: f64,
    #[serde(rename = "T")]
    pub horizon: f64,
    /// Initial vorticity for the transport and viscous experiments.
    pub initial: InitialData,
    /// Right-hand side for `solve-elliptic`.
    pub source: Source,
}

impl Default for Physics {
    fn default() -> Self {
        Physics {
            mu: 1e-3,
            mu_list: vec![1e-2, 3e-3, 1e-3, 3e-4, 1e-4],
            eta: 1.0,
            beta: 0.0,
            horizon: 1.0,
            initial: InitialData::RadialBump,
            source: Source::Constant { value: 1.0 },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialData {
    /// `(1 - 4 r^2)^4` at the origin.
    RadialBump,
    /// `(1 - |x - (0.3, 0)|^2 / 0.09)^3`.
    OffsetBump,
    Bump {
        center: [f64; 2],
        radius: f64,
        power: i32,
        amplitude: f64,
    },
}

impl InitialData {
    pub fn bump(&self) -> Bump {
        match *self {
            InitialData::RadialBump => Bump::radial(),
            InitialData::OffsetBump => Bump::offset(),
            InitialData::Bump {
                center,
                radius,
                power,
                amplitude,
            } => Bump {
                center,
                radius,
                power,
                amplitude,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Source {
    Constant { value: f64 },
    /// Indicator of the disk of `radius` at the origin.
    Patch { radius: f64 },
    Bump {
        center: [f64; 2],
        radius: f64,
        power: i32,
        amplitude: f64,
    },
}

impl Source {
    pub fn sample(&self, grid: &std::sync::Arc<lakesim_core::Grid>) -> lakesim_core::Result<ScalarField> {
        match *self {
            Source::Constant { value } => Ok(ScalarField::from_fn(grid, "f", |_| value)),
            Source::Patch { radius } => Ok(ScalarField::from_fn(grid, "f", |x| {
                (x[0].hypot(x[1]) <= radius) as u8 as f64
            })),
            Source::Bump {
                center,
                radius,
                power,
                amplitude,
            } => Bump {
                center,
                radius,
                power,
                amplitude,
            }
            .sample(grid),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GreenOptions {
    pub pairs: usize,
    /// Smallest admissible distance of the source support from the shore.
    pub delta: f64,
    /// Radius of the centred cubic bump used for the decomposition check.
    pub source_radius: f64,
}

impl Default for GreenOptions {
    fn default() -> Self {
        GreenOptions {
            pairs: 10_000,
            delta: 0.5,
            source_radius: 0.4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RegularityOptions {
    pub samples: usize,
    pub k_margin: f64,
    pub phi_diag: bool,
}

impl Default for RegularityOptions {
    fn default() -> Self {
        RegularityOptions {
            samples: 10_000,
            k_margin: 0.25,
            phi_diag: true,
        }
    }
}

impl RunConfig {
    pub fn resolution(&self) -> usize {
        self.numerics.n.unwrap_or(self.domain.resolution)
    }

    pub fn validate(&self, experiment: Experiment) -> Result<(), CliError> {
        let bad = |m: &str| Err(CliError::Validation(m.to_string()));
        if let Some(e) = self.experiment {
            if e != experiment {
                return bad(&format!(
                    "config names experiment {} but {} was requested",
                    e.name(),
                    experiment.name()
                ));
            }
        }
        let nm = &self.numerics;
        for (name, v) in [
            ("numerics.cfl", nm.cfl),
            ("numerics.tol_solve", nm.tol_solve),
            ("numerics.tol_picard", nm.tol_picard),
            ("numerics.tol_fixed", nm.tol_fixed),
            ("numerics.audit_tol", nm.audit_tol),
            ("numerics.window", nm.window),
            ("physics.T", self.physics.horizon),
            ("green.delta", self.green.delta),
            ("regularity.k_margin", self.regularity.k_margin),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(&format!("{name} must be positive, got {v}"));
            }
        }
        if let Some(dt) = nm.dt {
            if !(dt > 0.0) {
                return bad(&format!("numerics.dt must be positive, got {dt}"));
            }
        }
        if self.resolution() < 8 {
            return bad("numerics.n must be at least 8");
        }
        if nm.snapshots == 0 {
            return bad("numerics.snapshots must be at least 1");
        }
        if matches!(experiment, Experiment::RunViscous | Experiment::Sweep)
            && !(self.domain.alpha < 0.5)
        {
            return bad(&format!(
                "alpha must be < 0.5 for viscous runs, got {}",
                self.domain.alpha
            ));
        }
        if experiment == Experiment::GreenCheck && self.green.pairs == 0 {
            return bad("green.pairs must be at least 1");
        }
        Ok(())
    }
}

/// Reads a config document. A `manifest.json` written by a previous run is
/// accepted too; its `config` entry is used.
pub fn parse_config(text: &str) -> Result<RunConfig, CliError> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(CliError::parse)?;
    match value.get("manifest_version") {
        Some(_) => {
            let doc = value
                .get("config")
                .cloned()
                .ok_or_else(|| CliError::Validation("manifest has no config entry".into()))?;
            serde_json::from_value(doc).map_err(CliError::parse)
        }
        // parse the text again so errors carry line and column
        None => serde_json::from_str(text).map_err(CliError::parse),
    }
}

pub fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    parse_config(&text)
}

//! Named initial vorticity profiles.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{LakeError, Result};
use crate::geometry::field::ScalarField;
use crate::geometry::grid::Grid;

/// `amplitude * (1 - |x - c|^2 / R^2)^power` inside the disk of radius `R`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bump {
    pub center: [f64; 2],
    pub radius: f64,
    pub power: i32,
    #[serde(default = "one")]
    pub amplitude: f64,
}

fn one() -> f64 {
    1.0
}

impl Bump {
    /// Radial bump at the origin, `(1 - r^2 / 0.25)^4`.
    pub fn radial() -> Self {
        Bump {
            center: [0.0, 0.0],
            radius: 0.5,
            power: 4,
            amplitude: 1.0,
        }
    }

    /// Off-centre bump, `(1 - |x - (0.3, 0)|^2 / 0.09)^3`.
    pub fn offset() -> Self {
        Bump {
            center: [0.3, 0.0],
            radius: 0.3,
            power: 3,
            amplitude: 1.0,
        }
    }

    pub fn eval(&self, x: [f64; 2]) -> f64 {
        let q = ((x[0] - self.center[0]).powi(2) + (x[1] - self.center[1]).powi(2))
            / (self.radius * self.radius);
        if q < 1.0 {
            self.amplitude * (1.0 - q).powi(self.power)
        } else {
            0.0
        }
    }

    pub fn sample(&self, grid: &Arc<Grid>) -> Result<ScalarField> {
        if !(self.radius > 0.0) || self.power < 1 {
            return Err(LakeError::InvalidConfig(
                "bump needs a positive radius and power >= 1".into(),
            ));
        }
        Ok(ScalarField::from_fn(grid, "omega", |x| self.eval(x)))
    }
}

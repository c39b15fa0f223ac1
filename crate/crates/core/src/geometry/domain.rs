//! Lake domains: a simply-connected region carried onto the unit disk by an
//! explicit conformal map, with depth `b = c0 * phi^alpha`.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{LakeError, Result};

/// Samples used to represent the shoreline as a closed polyline.
const SHORE_SAMPLES: usize = 2048;
/// Round-trip tolerance for the map and its inverse.
pub const MAP_ROUND_TRIP_TOL: f64 = 1e-10;

/// JSON description of a lake domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    pub family: String,
    pub alpha: f64,
    #[serde(default = "default_c0")]
    pub c0: f64,
    #[serde(default = "default_resolution")]
    pub resolution: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub map_series: Option<MapSeries>,
}

fn default_c0() -> f64 {
    1.0
}

fn default_resolution() -> usize {
    128
}

impl DomainConfig {
    pub fn disk(alpha: f64) -> Self {
        DomainConfig {
            family: "disk".into(),
            alpha,
            c0: 1.0,
            resolution: default_resolution(),
            map_series: None,
        }
    }
}

/// Truncated power series for the map onto the disk and for its inverse.
/// Entry `k` holds the coefficient of `z^k` as `[re, im]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapSeries {
    pub forward: Vec<[f64; 2]>,
    pub inverse: Vec<[f64; 2]>,
}

/// Depth profile parameters. The defining function is supplied by the domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bathymetry {
    pub c0: f64,
    pub alpha: f64,
}

impl Bathymetry {
    pub fn new(c0: f64, alpha: f64) -> Result<Self> {
        if !(c0 > 0.0) || !c0.is_finite() {
            return Err(LakeError::DegenerateBathymetry(format!(
                "c0 must be positive, got {c0}"
            )));
        }
        if !(alpha >= 0.0) || !alpha.is_finite() {
            return Err(LakeError::InvalidConfig(format!(
                "alpha must be nonnegative, got {alpha}"
            )));
        }
        Ok(Bathymetry { c0, alpha })
    }

    /// Depth from the value of the defining function.
    #[inline]
    pub fn depth_from_phi(&self, phi: f64) -> f64 {
        if self.alpha == 0.0 {
            self.c0
        } else {
            self.c0 * phi.max(0.0).powf(self.alpha)
        }
    }

    /// Weak solutions of the viscous model need `alpha < 1/2`.
    pub fn validate_viscous(&self) -> Result<()> {
        if self.alpha < 0.5 {
            Ok(())
        } else {
            Err(LakeError::InvalidConfig(format!(
                "alpha must be < 0.5 for viscous runs, got {}",
                self.alpha
            )))
        }
    }
}

/// Conformal map from the lake onto the unit disk.
#[derive(Debug, Clone, PartialEq)]
pub enum ConformalMap {
    Identity,
    Series {
        forward: Vec<Complex64>,
        inverse: Vec<Complex64>,
    },
}

fn horner(coeffs: &[Complex64], z: Complex64) -> Complex64 {
    coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
}

fn horner_derivative(coeffs: &[Complex64], z: Complex64) -> Complex64 {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, (k, &c)| acc * z + c * k as f64)
}

impl ConformalMap {
    pub fn forward(&self, x: [f64; 2]) -> [f64; 2] {
        match self {
            ConformalMap::Identity => x,
            ConformalMap::Series { forward, .. } => {
                let w = horner(forward, Complex64::new(x[0], x[1]));
                [w.re, w.im]
            }
        }
    }

    pub fn inverse(&self, z: [f64; 2]) -> [f64; 2] {
        match self {
            ConformalMap::Identity => z,
            ConformalMap::Series { inverse, .. } => {
                let w = horner(inverse, Complex64::new(z[0], z[1]));
                [w.re, w.im]
            }
        }
    }

    /// Complex derivative `T'(x)`.
    pub fn derivative(&self, x: [f64; 2]) -> Complex64 {
        match self {
            ConformalMap::Identity => Complex64::new(1.0, 0.0),
            ConformalMap::Series { forward, .. } => {
                horner_derivative(forward, Complex64::new(x[0], x[1]))
            }
        }
    }
}

/// A simply-connected lake `{phi > 0}` with `phi = 1 - |T(x)|^2`.
#[derive(Debug, Clone)]
pub struct LakeDomain {
    family: String,
    bathymetry: Bathymetry,
    map: ConformalMap,
    shore: Vec<[f64; 2]>,
    bbox: [f64; 4],
}

impl LakeDomain {
    /// Builds and validates a domain from its configuration.
    pub fn build(config: &DomainConfig) -> Result<Self> {
        let bathymetry = Bathymetry::new(config.c0, config.alpha)?;
        let map = match config.family.as_str() {
            "disk" => {
                if config.map_series.is_some() {
                    return Err(LakeError::InvalidConfig(
                        "map_series is only valid for family \"series_map\"".into(),
                    ));
                }
                ConformalMap::Identity
            }
            "series_map" => {
                let series = config.map_series.as_ref().ok_or_else(|| {
                    LakeError::InvalidConfig("family \"series_map\" needs map_series".into())
                })?;
                let to_c = |v: &Vec<[f64; 2]>| -> Vec<Complex64> {
                    v.iter().map(|c| Complex64::new(c[0], c[1])).collect()
                };
                if series.forward.len() < 2 || series.inverse.len() < 2 {
                    return Err(LakeError::InvalidConfig(
                        "map series need at least a linear term".into(),
                    ));
                }
                ConformalMap::Series {
                    forward: to_c(&series.forward),
                    inverse: to_c(&series.inverse),
                }
            }
            other => return Err(LakeError::UnsupportedDomain(other.to_string())),
        };
        Self::from_parts(config.family.clone(), bathymetry, map)
    }

    /// Unit disk with `phi = 1 - |x|^2`.
    pub fn disk(alpha: f64, c0: f64) -> Result<Self> {
        Self::from_parts("disk".into(), Bathymetry::new(c0, alpha)?, ConformalMap::Identity)
    }

    fn from_parts(family: String, bathymetry: Bathymetry, map: ConformalMap) -> Result<Self> {
        let shore: Vec<[f64; 2]> = (0..SHORE_SAMPLES)
            .map(|k| {
                let t = 2.0 * std::f64::consts::PI * k as f64 / SHORE_SAMPLES as f64;
                map.inverse([t.cos(), t.sin()])
            })
            .collect();
        let mut bbox = [f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY];
        for p in &shore {
            bbox[0] = bbox[0].min(p[0]);
            bbox[1] = bbox[1].min(p[1]);
            bbox[2] = bbox[2].max(p[0]);
            bbox[3] = bbox[3].max(p[1]);
        }
        let domain = LakeDomain {
            family,
            bathymetry,
            map,
            shore,
            bbox,
        };
        domain.validate()?;
        Ok(domain)
    }

    fn validate(&self) -> Result<()> {
        if let ConformalMap::Series { .. } = self.map {
            let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
            for _ in 0..1000 {
                let r = 0.98 * rng.gen::<f64>().sqrt();
                let t = rng.gen::<f64>() * 2.0 * std::f64::consts::PI;
                let z = [r * t.cos(), r * t.sin()];
                let x = self.map.inverse(z);
                let back = self.map.inverse(self.map.forward(x));
                let err = ((back[0] - x[0]).powi(2) + (back[1] - x[1]).powi(2)).sqrt();
                if !(err <= MAP_ROUND_TRIP_TOL) {
                    return Err(LakeError::UnsupportedDomain(format!(
                        "map series do not invert each other (round-trip error {err:.3e})"
                    )));
                }
            }
        }
        for p in self.shore.iter().step_by(16) {
            let g = self.grad_phi(*p);
            if !(g[0].hypot(g[1]) > 1e-8) {
                return Err(LakeError::DegenerateBathymetry(format!(
                    "grad phi vanishes at shore point ({:.4}, {:.4})",
                    p[0], p[1]
                )));
            }
        }
        Ok(())
    }

    pub fn family(&self) -> &str {
        &self.family
    }

    pub fn bathymetry(&self) -> Bathymetry {
        self.bathymetry
    }

    pub fn alpha(&self) -> f64 {
        self.bathymetry.alpha
    }

    pub fn map(&self) -> &ConformalMap {
        &self.map
    }

    /// `[xmin, ymin, xmax, ymax]` of the shoreline.
    pub fn bbox(&self) -> [f64; 4] {
        self.bbox
    }

    pub fn shore(&self) -> &[[f64; 2]] {
        &self.shore
    }

    pub fn is_disk(&self) -> bool {
        matches!(self.map, ConformalMap::Identity)
    }

    #[inline]
    pub fn to_disk(&self, x: [f64; 2]) -> [f64; 2] {
        self.map.forward(x)
    }

    #[inline]
    pub fn from_disk(&self, z: [f64; 2]) -> [f64; 2] {
        self.map.inverse(z)
    }

    #[inline]
    pub fn phi(&self, x: [f64; 2]) -> f64 {
        let z = self.map.forward(x);
        1.0 - z[0] * z[0] - z[1] * z[1]
    }

    pub fn grad_phi(&self, x: [f64; 2]) -> [f64; 2] {
        let z = self.map.forward(x);
        let zc = Complex64::new(z[0], -z[1]) * self.map.derivative(x);
        [-2.0 * zc.re, 2.0 * zc.im]
    }

    #[inline]
    pub fn contains(&self, x: [f64; 2]) -> bool {
        self.phi(x) > 0.0
    }

    /// Depth `b(x)`; zero outside the lake when `alpha > 0`.
    #[inline]
    pub fn depth(&self, x: [f64; 2]) -> f64 {
        self.bathymetry.depth_from_phi(self.phi(x))
    }

    /// Value of the depth on the shoreline.
    pub fn shore_depth(&self) -> f64 {
        self.bathymetry.depth_from_phi(0.0)
    }

    /// Unsigned distance to the shoreline.
    pub fn boundary_distance(&self, x: [f64; 2]) -> f64 {
        if self.is_disk() {
            return (1.0 - x[0].hypot(x[1])).abs();
        }
        let n = self.shore.len();
        let mut best = f64::INFINITY;
        for k in 0..n {
            let a = self.shore[k];
            let b = self.shore[(k + 1) % n];
            let d = [b[0] - a[0], b[1] - a[1]];
            let len2 = d[0] * d[0] + d[1] * d[1];
            let t = if len2 > 0.0 {
                (((x[0] - a[0]) * d[0] + (x[1] - a[1]) * d[1]) / len2).clamp(0.0, 1.0)
            } else {
                0.0
            };
            let p = [a[0] + t * d[0] - x[0], a[1] + t * d[1] - x[1]];
            best = best.min(p[0] * p[0] + p[1] * p[1]);
        }
        best.sqrt()
    }

    /// `|T'(x)|`.
    pub fn map_stretch(&self, x: [f64; 2]) -> f64 {
        self.map.derivative(x).norm()
    }

    /// Closed form of `Laplacian(1 / sqrt(b))` at an interior point.
    ///
    /// With `s = |T(x)|^2` and `a = alpha / 2`, the disk profile
    /// `(1 - s)^(-a)` has Laplacian `4a (1-s)^(-a-1) + 4a(a+1) s (1-s)^(-a-2)`,
    /// and the conformal map multiplies it by `|T'(x)|^2`.
    pub fn laplacian_inv_sqrt_depth(&self, x: [f64; 2]) -> f64 {
        let a = 0.5 * self.bathymetry.alpha;
        if a == 0.0 {
            return 0.0;
        }
        let z = self.map.forward(x);
        let s = z[0] * z[0] + z[1] * z[1];
        let q = 1.0 - s;
        let disk = 4.0 * a * q.powf(-a - 1.0) + 4.0 * a * (a + 1.0) * s * q.powf(-a - 2.0);
        let stretch = self.map.derivative(x).norm_sqr();
        disk * stretch / self.bathymetry.c0.sqrt()
    }
}

/// Coefficients of the inverse of `w = z + eps z^2` up to `z^order`:
/// `z = sum_k (-1)^k Catalan(k) eps^k w^(k+1)`.
pub fn quadratic_map_inverse(eps: f64, order: usize) -> Vec<[f64; 2]> {
    let mut out = vec![[0.0, 0.0]; order + 1];
    let mut catalan = 1.0f64;
    for k in 0..order {
        if k > 0 {
            catalan = catalan * 2.0 * (2.0 * k as f64 - 1.0) / (k as f64 + 1.0);
        }
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        out[k + 1] = [sign * catalan * eps.powi(k as i32), 0.0];
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_and_degenerate_disk_depths() {
        let flat = LakeDomain::disk(0.0, 1.0).unwrap();
        assert_eq!(flat.depth([0.3, 0.4]), 1.0);
        let deg = LakeDomain::disk(1.0, 1.0).unwrap();
        assert_eq!(deg.depth([0.0, 0.0]), 1.0);
        assert!((deg.depth([0.6, 0.0]) - 0.64).abs() < 1e-15);
        assert_eq!(deg.depth([1.0, 0.0]), 0.0);
    }

    #[test]
    fn viscous_alpha_limit() {
        assert!(Bathymetry::new(1.0, 0.4).unwrap().validate_viscous().is_ok());
        assert!(Bathymetry::new(1.0, 0.6).unwrap().validate_viscous().is_err());
    }

    #[test]
    fn rejects_bad_configs() {
        let mut cfg = DomainConfig::disk(-0.1);
        assert!(matches!(LakeDomain::build(&cfg), Err(LakeError::InvalidConfig(_))));
        cfg.alpha = 1.0;
        cfg.c0 = 0.0;
        assert!(matches!(
            LakeDomain::build(&cfg),
            Err(LakeError::DegenerateBathymetry(_))
        ));
        cfg.c0 = 1.0;
        cfg.family = "annulus".into();
        assert!(matches!(
            LakeDomain::build(&cfg),
            Err(LakeError::UnsupportedDomain(_))
        ));
    }

    fn bulged_config(eps: f64) -> DomainConfig {
        // inverse map z -> z + eps z^2, forward map is its series reversion
        DomainConfig {
            family: "series_map".into(),
            alpha: 1.0,
            c0: 1.0,
            resolution: 64,
            map_series: Some(MapSeries {
                forward: quadratic_map_inverse(eps, 40),
                inverse: vec![[0.0, 0.0], [1.0, 0.0], [eps, 0.0]],
            }),
        }
    }

    #[test]
    fn series_map_round_trip() {
        let d = LakeDomain::build(&bulged_config(0.1)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let r = 0.99 * rng.gen::<f64>().sqrt();
            let t = rng.gen::<f64>() * std::f64::consts::TAU;
            let x = d.from_disk([r * t.cos(), r * t.sin()]);
            assert!(d.contains(x));
            let back = d.from_disk(d.to_disk(x));
            assert!((back[0] - x[0]).hypot(back[1] - x[1]) < 1e-10);
        }
        // shore points map to the unit circle
        for p in d.shore().iter().step_by(97) {
            let z = d.to_disk(*p);
            assert!((z[0].hypot(z[1]) - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn mismatched_series_rejected() {
        let mut cfg = bulged_config(0.1);
        cfg.map_series.as_mut().unwrap().forward = vec![[0.0, 0.0], [1.0, 0.0]];
        assert!(matches!(
            LakeDomain::build(&cfg),
            Err(LakeError::UnsupportedDomain(_))
        ));
    }

    #[test]
    fn laplacian_of_inverse_sqrt_depth_matches_finite_differences() {
        for cfg in [DomainConfig::disk(1.0), bulged_config(0.1)] {
            let d = LakeDomain::build(&cfg).unwrap();
            let g = |x: [f64; 2]| 1.0 / d.depth(x).sqrt();
            let e = 1e-4;
            for x in [[0.1, 0.2], [-0.4, 0.3], [0.0, 0.0], [0.5, -0.5]] {
                let fd = (g([x[0] + e, x[1]]) + g([x[0] - e, x[1]]) + g([x[0], x[1] + e])
                    + g([x[0], x[1] - e])
                    - 4.0 * g(x))
                    / (e * e);
                let exact = d.laplacian_inv_sqrt_depth(x);
                assert!((fd - exact).abs() < 1e-4 * exact.abs().max(1.0), "{fd} vs {exact}");
            }
        }
    }

    #[test]
    fn grad_phi_matches_finite_differences() {
        let d = LakeDomain::build(&bulged_config(0.1)).unwrap();
        let e = 1e-6;
        let x = [0.2, -0.3];
        let g = d.grad_phi(x);
        let gx = (d.phi([x[0] + e, x[1]]) - d.phi([x[0] - e, x[1]])) / (2.0 * e);
        let gy = (d.phi([x[0], x[1] + e]) - d.phi([x[0], x[1] - e])) / (2.0 * e);
        assert!((g[0] - gx).abs() < 1e-8 && (g[1] - gy).abs() < 1e-8);
    }
}

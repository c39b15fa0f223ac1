use thiserror::Error;

/// Errors raised by the lake simulator.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum LakeError {
    #[error("unsupported domain family: {0}")]
    UnsupportedDomain(String),
    #[error("degenerate bathymetry: {0}")]
    DegenerateBathymetry(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("resolution too coarse: {interior} interior nodes (need at least {required})")]
    ResolutionTooCoarse { interior: usize, required: usize },
    #[error("invalid exponent p = {0} (need p >= 1)")]
    InvalidExponent(f64),
    #[error("solver diverged after {iterations} iterations (relative residual {residual:.3e}, target {target:.3e})")]
    SolverDiverged {
        iterations: usize,
        residual: f64,
        target: f64,
    },
    #[error("nonpositive bathymetry {value:.3e} at face ({x:.4}, {y:.4})")]
    SingularCoefficient { x: f64, y: f64, value: f64 },
    #[error("coincident points in Green kernel evaluation")]
    CoincidentPoints,
    #[error("source point at distance {distance:.4} from the shore, need at least {delta:.4}")]
    SourceTooCloseToBoundary { distance: f64, delta: f64 },
    #[error("source support at distance {distance:.4} from the shore, need at least {delta:.4}")]
    SupportTooClose { distance: f64, delta: f64 },
    #[error("characteristic left the domain at ({x:.5}, {y:.5}), t = {t:.5}")]
    LeftDomain { x: f64, y: f64, t: f64 },
    #[error("Picard iteration failed to contract on window of length {window:.4e} (ratios {ratios:?})")]
    NoContraction { window: f64, ratios: Vec<f64> },
    #[error("Picard iteration exceeded {max_iter} iterates (last difference {last_diff:.3e})")]
    MaxIterExceeded { max_iter: usize, last_diff: f64 },
    #[error("window length {window:.3e} fell below the minimum {min:.3e}")]
    WindowUnderflow { window: f64, min: f64 },
    #[error("invalid initial data: {0}")]
    InvalidInitialData(String),
    #[error("energy grew from {before:.6e} to {after:.6e} at t = {t:.4}")]
    StabilityViolation { t: f64, before: f64, after: f64 },
    #[error("energy audit failed at step {step} (t = {t:.4}): {reason}")]
    AuditFailed { step: usize, t: f64, reason: String },
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("rate fit needs at least 3 positive points, got {0}")]
    FitUnderdetermined(usize),
    #[error("nonpositive error value {value:.3e} at mu = {mu:.3e}")]
    NonpositiveError { mu: f64, value: f64 },
    #[error("io error: {0}")]
    Io(String),
    #[error("format error: {0}")]
    Format(String),
}

impl From<std::io::Error> for LakeError {
    fn from(e: std::io::Error) -> Self {
        LakeError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, LakeError>;

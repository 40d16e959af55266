use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unsupported dimension {0} (expected 2 or 3)")]
    Dimension(usize),
    #[error("grid needs at least 8 points per axis, got {0}")]
    TooFewPoints(usize),
    #[error("half-width must be finite and positive, got {0}")]
    HalfWidth(f64),
    #[error("invalid density: {0}")]
    InvalidDensity(String),
    #[error("data concentrated near a hyperplane: covariance eigenvalues {smallest:e} vs {largest:e}, so d - T_max would vanish")]
    DegenerateCovariance { smallest: f64, largest: f64 },
    #[error("normalization did not converge after {0} resampling passes")]
    NormalizationStalled(usize),
    #[error("temperature tensor is not normalized (trace {0}, expected the dimension)")]
    NotNormalized(f64),
    #[error("negative time {0}")]
    NegativeTime(f64),
    #[error("moment order {0} outside the supported range")]
    MomentOrder(f64),
    #[error("cost guard: {0}")]
    CostGuard(String),
    #[error("time step {dt:e} exceeds the stability bound; use dt <= {suggested:e}")]
    Cfl { dt: f64, suggested: f64 },
    #[error("mass drift {0:e} exceeds 1e-8")]
    MassDrift(f64),
    #[error("ratio undefined: density is constant on the sphere")]
    RatioUndefined,
    #[error("empty parameter family")]
    EmptyFamily,
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("fixed-point iteration did not converge in {iterations} iterations (last iterates {last:?})")]
    NoConvergence { iterations: usize, last: Vec<f64> },
}

pub type Result<T> = std::result::Result<T, Error>;

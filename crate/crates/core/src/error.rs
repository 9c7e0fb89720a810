use thiserror::Error;

/// Errors raised by the core library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("horizon too small: n = {n}, the schedule needs n >= {min_n}")]
    HorizonTooSmall { n: u64, min_n: u64 },

    #[error("gradient norm {norm} exceeds the declared bound G = {bound}")]
    GradientBound { norm: f64, bound: f64 },

    #[error("observed cost {value} lies outside [-C, C] with C = {bound}")]
    CostBound { value: f64, bound: f64 },

    #[error("update called without a pending query")]
    NoPendingQuery,

    #[error("function value is not finite at the requested point (outside its domain)")]
    Domain,

    #[error("unsupported function class: {0}")]
    Unsupported(String),

    #[error("singular covariance: smallest eigenvalue {min} vs largest {max}")]
    SingularCovariance { min: f64, max: f64 },

    #[error("dimension {dim} too high for rejection sampling (acceptance rate below 1e-6)")]
    RejectionSampling { dim: usize },

    #[error("body does not contain the origin in its interior")]
    OriginNotInterior,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

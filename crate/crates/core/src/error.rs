use thiserror::Error;

/// Errors raised by the geometry, spectral and fitting layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("bandlimit {0} is too small (need L >= 4)")]
    BandlimitTooSmall(usize),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("conformal factor must be positive (min = {min})")]
    NonPositiveFactor { min: f64 },

    #[error("bandlimit mismatch: grid L = {grid}, coefficients L = {coeffs}")]
    BandlimitMismatch { grid: usize, coeffs: usize },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("null frame solve is singular at node ({i}, {j}) (pivot {pivot:e})")]
    SingularFrame { i: usize, j: usize, pivot: f64 },

    #[error("finite difference step {0} is outside the usable range")]
    StepOutOfRange(f64),

    #[error("1/omega has no admissible l <= 1 part (b^2 - |a|^2 = {0})")]
    DegenerateFit(f64),

    #[error("{0}")]
    Insufficient(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("adaptive quadrature did not converge (error estimate {error:e} after {intervals} subintervals)")]
    QuadratureFailure { error: f64, intervals: usize },

    #[error("integration unstable at t = {time:e} s (|entry| = {magnitude:e}); reduce dt")]
    StepInstability { time: f64, magnitude: f64 },

    #[error("state is not normalized: sum of |c_n|^2 = {0}")]
    Normalization(f64),

    #[error("order {n} outside the validated range 0..={max}")]
    OutOfRange { n: usize, max: usize },

    #[error("fit failed: {0}")]
    FitFailure(String),

    #[error("invalid data: {0}")]
    InvalidData(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

/// Fails unless `value` is finite and strictly positive.
pub(crate) fn ensure_positive(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(Error::param(
            name,
            format!("must be finite and > 0, got {value}"),
        ))
    }
}

/// Fails unless `value` is finite and non-negative.
pub(crate) fn ensure_non_negative(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value >= 0.0 {
        Ok(value)
    } else {
        Err(Error::param(
            name,
            format!("must be finite and >= 0, got {value}"),
        ))
    }
}

pub(crate) fn ensure_finite(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::param(name, format!("must be finite, got {value}")))
    }
}

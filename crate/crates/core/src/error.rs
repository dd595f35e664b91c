use thiserror::Error;

/// Errors produced by the analytic, quadrature and Monte-Carlo routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GcnError {
    #[error("invalid register label: {0}")]
    InvalidLabel(String),

    #[error("length mismatch: {what} has length {got}, expected {expected}")]
    LengthMismatch {
        what: &'static str,
        got: usize,
        expected: usize,
    },

    #[error("index pair ({j}, {k}) invalid for register of length {len}")]
    InvalidIndex { j: usize, k: usize, len: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("enumeration guard exceeded: {what} = {value}, allowed at most {max}")]
    GuardExceeded {
        what: &'static str,
        value: usize,
        max: usize,
    },

    #[error("invalid time grid: {0}")]
    InvalidGrid(String),

    #[error("cross-spectral matrix not positive semidefinite at omega = {omega}: eigenvalue {eigenvalue}")]
    CovarianceNotPsd { omega: f64, eigenvalue: f64 },

    #[error("quadrature did not converge: estimate {value}, error estimate {error}")]
    QuadratureNonConvergence { value: f64, error: f64 },

    #[error("scenario mismatch: {0}")]
    ScenarioMismatch(String),

    #[error("white-noise guard violated: omega_c = {omega_c} but analytic rate {gamma} requires omega_c >= {required}")]
    WhiteNoiseGuard {
        omega_c: f64,
        gamma: f64,
        required: f64,
    },

    #[error("rate fit failed: {0}")]
    Fit(String),
}

pub type Result<T> = std::result::Result<T, GcnError>;

pub(crate) fn require_positive(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(GcnError::InvalidParameter {
            name,
            reason: format!("must be finite and > 0, got {value}"),
        })
    }
}

pub(crate) fn require_non_negative(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(GcnError::InvalidParameter {
            name,
            reason: format!("must be finite and >= 0, got {value}"),
        })
    }
}

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("stationary density is not normalizable: k_T*beta = {kt_beta} >= 1")]
    NonNormalizable { kt_beta: f64 },

    #[error("integration blew up on path {path} at t = {time} (dt = {dt})")]
    IntegrationBlowup { path: usize, time: f64, dt: f64 },

    #[error("time step {dt} violates the stability limit; use dt <= {suggested}")]
    Cfl { dt: f64, suggested: f64 },

    #[error("structure tensor lost positive semidefiniteness at t = {time} (min eigenvalue {min_eigenvalue})")]
    PsdViolation { time: f64, min_eigenvalue: f64 },

    #[error("need at least {required} samples, got {got}")]
    TooFewSamples { required: usize, got: usize },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for failures of the numerics (blowup, step-size limits) as opposed
    /// to rejected input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::IntegrationBlowup { .. } | Error::Cfl { .. } | Error::PsdViolation { .. }
        )
    }
}

pub(crate) fn require_positive(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("must be finite and > 0, got {value}")))
    }
}

pub(crate) fn require_non_negative(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("must be finite and >= 0, got {value}")))
    }
}

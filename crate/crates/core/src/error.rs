use alloc::string::String;

use crate::wrench::Frame;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The Jacobian is at or near a singular configuration. Carries the
    /// `sqrt(det(J Jᵀ))` measure and the singular-value ratio that tripped the guard.
    #[error("singular configuration: measure {measure:e}, singular-value ratio {ratio:e}")]
    Singular { measure: f64, ratio: f64 },

    #[error("matrix is not a proper rotation (deviation {deviation:e})")]
    InvalidRotation { deviation: f64 },

    #[error("wrench expressed in {found:?} frame, expected {expected:?}")]
    FrameMismatch { expected: Frame, found: Frame },

    #[error("training diverged on joint {joint} at epoch {epoch}")]
    TrainingFailed { joint: usize, epoch: usize },

    #[error("model shape mismatch: {0}")]
    ShapeMismatch(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}

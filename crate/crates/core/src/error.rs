use thiserror::Error;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter {
        name: &'static str,
        reason: &'static str,
    },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    /// The surrogate curvature diverges at a zero anchor when `beta < 2`.
    #[error("singular anchor: |e| below floor with beta < 2")]
    SingularAnchor,

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("division by zero in {0}")]
    DivisionByZero(&'static str),

    #[error("singular predicted covariance")]
    SingularCovariance,

    #[error("trajectory too short: {len} samples, need at least {needed}")]
    TrajectoryTooShort { len: usize, needed: usize },

    #[error("empty parameter grid")]
    EmptyGrid,
}

pub(crate) fn invalid(name: &'static str, reason: &'static str) -> Error {
    Error::InvalidParameter { name, reason }
}

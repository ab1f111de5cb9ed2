use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("input is empty")]
    Empty,

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("value at index {index} is not a probability: {value}")]
    InvalidProbability { index: usize, value: f64 },

    #[error("critical constant at index {index} is outside [0, 1] or breaks monotonicity: {value}")]
    InvalidConstant { index: usize, value: f64 },

    #[error("alpha must lie in (0, 1), got {0}")]
    InvalidAlpha(f64),

    #[error("lambda must lie in (0, 1), got {0}")]
    InvalidLambda(f64),

    #[error("invalid block layout: {0}")]
    InvalidLayout(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("estimator returned a non-positive or non-finite value: {0}")]
    InvalidEstimate(f64),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidAlpha(alpha))
    }
}

pub(crate) fn check_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidLambda(lambda))
    }
}

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("degenerate configuration: {0}")]
    Degenerate(String),

    #[error("invalid exponent: {0}")]
    Exponent(String),

    #[error("shape does not fit inside the grid box: {0}")]
    Truncation(String),

    #[error("undefined ratio: {0}")]
    UndefinedRatio(String),

    #[error("insufficient Monte Carlo budget: {0}")]
    InsufficientBudget(String),

    #[error("objective diverged: {0}")]
    Divergence(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }

    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("index {index} outside source domain [{lo}, {hi}]")]
    OutOfRange { index: i64, lo: i64, hi: i64 },
    #[error("{what}: size {size} exceeds cap {cap}")]
    ResourceLimit { what: &'static str, size: usize, cap: usize },
    #[error("singular matrix (condition estimate {condition:e})")]
    Singular { condition: f64 },
    #[error("numerical failure: {0}")]
    Numeric(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid dimensions: {0}")]
    Dimension(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("argument outside domain: {0}")]
    Domain(String),

    #[error("rank deficient matrix: {0}")]
    Rank(String),

    #[error("value out of representable range: {0}")]
    Range(String),

    #[error("fit failed: {0}")]
    Fit(String),
}

use thiserror::Error;

/// Errors raised by the geometry, meshing and eigenvalue routines.
#[derive(Debug, Error)]
pub enum SteklovError {
    /// A point or mesh vertex lies outside the domain of a chart.
    #[error("outside chart domain: {0}")]
    Domain(String),
    /// A radius, tangent vector or volume exceeds what the manifold supports.
    #[error("out of range: {0}")]
    Range(String),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("numerical failure: {0}")]
    Numeric(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, SteklovError>;

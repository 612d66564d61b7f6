use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// Grid geometry with zero dims, non-positive resolution, etc.
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    /// Parameter outside its documented range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A point or index fell outside the structure that was queried.
    #[error("out of bounds: {0}")]
    OutOfBounds(String),

    /// Two structures that must share a grid registration do not.
    #[error("geometry mismatch: {0}")]
    GeometryMismatch(String),

    /// Malformed or truncated binary file.
    #[error("file format: {0}")]
    FileFormat(String),

    /// Malformed text input (point clouds, scenario files).
    #[error("parse error: {0}")]
    Parse(String),

    /// Scenario description rejected.
    #[error("scenario: {0}")]
    Scenario(String),

    /// The optimizer evaluated a non-finite cost, which signals bad
    /// parameters rather than a solver bug.
    #[error("non-finite cost encountered (check weights and barrier delta)")]
    NonFiniteCost,

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

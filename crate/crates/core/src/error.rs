//! Error type shared across the toolkit.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A point lies outside the domain an operation requires (off the
    /// surface, outside Omega, phantom support leaking out of Omega, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// A structurally invalid argument (empty patch, zero resolution,
    /// grid too short for a stencil, non-positive radius, ...).
    #[error("invalid argument: {0}")]
    Argument(String),

    /// Direction excluded by the surface geometry (vertical for the
    /// paraboloid, horizontal for the hyperplane, xi' = 0 for the
    /// general quadric).
    #[error("tangential direction: {0}")]
    Tangential(String),

    /// A query radius collides with a quadrature node of the
    /// principal-value integral.
    #[error("singular node: {0}")]
    SingularNode(String),

    /// Sinogram radii do not cover the requested evaluation radii.
    #[error("coverage error: {0}")]
    Coverage(String),

    /// NaN/Inf or another numeric failure surfaced mid-pipeline.
    #[error("numeric failure: {0}")]
    Numeric(String),

    /// Operation not defined for this surface kind.
    #[error("unsupported surface: {0}")]
    Unsupported(String),

    /// Malformed configuration or file content.
    #[error("format error: {0}")]
    Format(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
    pub fn argument(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }
    pub fn tangential(msg: impl Into<String>) -> Self {
        Error::Tangential(msg.into())
    }
}

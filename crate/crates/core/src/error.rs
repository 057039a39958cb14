use thiserror::Error;

/// Errors surfaced by the library. Resource caps are kept distinct from
/// parameter problems so callers can map them to different exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("resource cap exceeded: {0}")]
    ResourceCap(String),

    #[error("terminals are not connected")]
    Disconnected,

    #[error("unknown experiment '{name}'; available: {available}")]
    UnknownExperiment { name: String, available: String },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid_parameter(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub fn invalid_geometry(msg: impl Into<String>) -> Self {
        Error::InvalidGeometry(msg.into())
    }

    pub fn resource_cap(msg: impl Into<String>) -> Self {
        Error::ResourceCap(msg.into())
    }
}

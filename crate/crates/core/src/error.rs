use thiserror::Error;

/// Errors raised by the simulation pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("size guard exceeded: {what} has {actual}, limit is {limit}")]
    SizeGuard {
        what: &'static str,
        actual: usize,
        limit: usize,
    },
    #[error("circle of radius {radius} around ({x}, {y}) leaves the padded domain")]
    CircleOutOfDomain { x: f64, y: f64, radius: f64 },
    #[error("invalid subbox: {0}")]
    InvalidSubbox(String),
    #[error("gamma must lie in (0, 2), got {0}")]
    GammaOutOfRange(f64),
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },
    #[error("block {index} out of range ({count} blocks)")]
    InvalidBlock { index: usize, count: usize },
    #[error("nonpositive mass {0} in moment sample")]
    NonpositiveMass(f64),
    #[error("config error at `{key}`: {reason}")]
    Config { key: String, reason: String },
    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    pub fn param(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.into(),
            reason: reason.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// Errors raised by the workbench.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unknown catalog id `{0}`")]
    UnknownId(String),

    #[error("invalid parameters for `{id}`: {reason}")]
    InvalidParams { id: String, reason: String },

    #[error("degenerate coefficient: |mu| = {modulus} >= 1 at {location} (request truncation first)")]
    Degenerate { modulus: f64, location: String },

    #[error("grid size {0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("index {index} out of range (length {len})")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("point {0} lies outside the sampled box")]
    OutsideBox(String),

    #[error("evaluation at |z| = {modulus} is inside the boundary layer; need at least {required_samples} samples")]
    BoundaryLayer { modulus: f64, required_samples: usize },

    #[error("polyline rejected: {0}")]
    Polyline(String),

    #[error("path rejected: {0}")]
    Path(String),

    #[error("invalid test-function family: {0}")]
    Family(String),

    #[error("invalid Orlicz function: {0}")]
    Orlicz(String),

    #[error("unsupported problem: {0}")]
    Unsupported(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Config(e.to_string())
    }
}

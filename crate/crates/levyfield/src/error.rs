use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("quadrature did not converge: achieved error {achieved:e} after {panels} panels")]
    Quadrature { achieved: f64, panels: usize },
    #[error("size limit exceeded: {0}")]
    SizeLimit(String),
    #[error("grid coverage: {0}")]
    Coverage(String),
    #[error("model is not just-renormalizable: vertex {vertex} has scaling sum {sum} (expected {expected})")]
    NonRenormalizable { vertex: usize, sum: f64, expected: f64 },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("io: {0}")]
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
        Error::Io(e.to_string())
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}

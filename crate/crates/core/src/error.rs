use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid network: {0}")]
    Network(String),
    #[error("vertex {0} is outside the represented vertex set")]
    OutOfScope(String),
    #[error("malformed kernel: {0}")]
    Kernel(String),
    #[error("network is disconnected")]
    Disconnected,
    #[error("enumeration cap exceeded: {0}")]
    CapExceeded(String),
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("network has no embedding in R^d: {0}")]
    NotEmbeddable(String),
    #[error("singular covariance matrix")]
    Singular,
    #[error("{0}")]
    Precondition(String),
}

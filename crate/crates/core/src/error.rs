use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A parameter lies outside the domain of the formula it feeds.
    #[error("domain error: {0}")]
    Domain(String),
    /// Malformed or non-finite input data.
    #[error("data error: {0}")]
    Data(String),
    /// The Gumbel norming constants cannot be formed for this dimension.
    #[error("calibration error: {0}")]
    Calibration(String),
    /// Evaluation at a pole of a separation function (s = r).
    #[error("singularity: {0}")]
    Singularity(String),
    /// Invalid configuration or command-line usage.
    #[error("config error: {0}")]
    Config(String),
}

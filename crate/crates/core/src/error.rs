use thiserror::Error;

/// Errors raised anywhere in the pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("degenerate matrix (det = 0) does not induce a covering map")]
    DegenerateMatrix,

    #[error("unsupported case: {0}")]
    Unsupported(String),

    #[error("partition rejected: {}", .0.join("; "))]
    Partition(Vec<String>),

    #[error("profile validation: {0}")]
    Profile(String),

    #[error("preconditions unmet: {0}")]
    Preconditions(String),

    #[error("cannot certify: {0}")]
    CannotCertify(String),

    #[error("search failed: {0}")]
    SearchFailure(String),

    #[error("node budget exceeded: {needed} nodes requested, cap is {cap} (try a smaller depth)")]
    Budget { needed: u64, cap: u64 },

    #[error("config error at `{path}`: {msg}")]
    Config { path: String, msg: String },

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

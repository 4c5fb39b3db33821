use thiserror::Error;

/// Errors produced by the flowsentry core library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("data error: {0}")]
    Data(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("model error: {0}")]
    Model(String),

    #[error("training aborted: {0}")]
    Training(String),

    #[error("ledger append denied: detection nodes are read-only")]
    RoleViolation,

    #[error("chain broken at block {0}")]
    BrokenChain(u64),

    #[error("topology error: {0}")]
    Topology(String),

    #[error("scenario error: {0}")]
    Scenario(String),
}

impl Error {
    pub fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }

    pub fn data(message: impl Into<String>) -> Self {
        Error::Data(message.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

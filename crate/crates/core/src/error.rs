use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("index ({row}, {col}) outside a {n1}x{n2} matrix")]
    IndexOutOfRange {
        row: usize,
        col: usize,
        n1: usize,
        n2: usize,
    },

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    /// Exhaustive enumeration refused; `hint` names the approximate route.
    #[error("dimension {dim} exceeds the exhaustive limit {limit}; {hint}")]
    ExhaustiveLimit {
        dim: usize,
        limit: usize,
        hint: &'static str,
    },

    #[error("search budget exhausted: {0}")]
    Budget(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}

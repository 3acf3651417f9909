use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A precondition on an argument does not hold.
    #[error("domain error: {0}")]
    Domain(String),

    /// Malformed input row (1-based row index).
    #[error("format error at row {row}: {message}")]
    Row { row: usize, message: String },

    #[error("row-count mismatch: expected {expected} rows, found {found}")]
    RowCount { expected: usize, found: usize },

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn row(row: usize, msg: impl Into<String>) -> Self {
        Error::Row {
            row,
            message: msg.into(),
        }
    }

    /// True for violations of an operation's contract, as opposed to bad input files.
    pub fn is_contract_violation(&self) -> bool {
        matches!(self, Error::Domain(_))
    }
}

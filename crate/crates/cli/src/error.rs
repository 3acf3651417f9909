use thiserror::Error;

pub type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    /// Unreadable, malformed or mismatched inputs (exit 2).
    #[error("{0}")]
    Input(String),

    /// An operation's precondition was violated (exit 3).
    #[error("{0}")]
    Contract(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Contract(_) => 3,
        }
    }

    pub fn input(msg: impl Into<String>) -> Self {
        CliError::Input(msg.into())
    }
}

impl From<fulcal::Error> for CliError {
    fn from(e: fulcal::Error) -> Self {
        if e.is_contract_violation() {
            CliError::Contract(e.to_string())
        } else {
            CliError::Input(e.to_string())
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Input(format!("json: {e}"))
    }
}

/// Attaches a path to an I/O failure.
pub fn io_error(path: &std::path::Path, e: std::io::Error) -> CliError {
    CliError::Input(format!("{}: {e}", path.display()))
}

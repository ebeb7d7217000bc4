use std::io;
use std::path::Path;

use fsbc_core::Error as CoreError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error(transparent)]
    Core(#[from] CoreError),
}

impl CliError {
    pub fn io(path: &Path, source: io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    /// 1: usage, parse, validation or IO; 2: budget or message-set cap;
    /// 3: solver failure.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(CoreError::BudgetExceeded { .. } | CoreError::RateTooHigh { .. }) => 2,
            CliError::Core(CoreError::SolverStalled { .. }) => 3,
            _ => 1,
        }
    }
}

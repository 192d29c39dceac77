//! Error classification behind the process exit codes: configuration
//! and input problems exit 1, numerical failures exit 2.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Malformed or inconsistent configuration and unreadable inputs.
    #[error("{0}")]
    Validation(String),

    /// NaN, inverted cells, or failed runs in an otherwise valid setup.
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Numerical(_) => 2,
        }
    }
}

impl From<elastophase_core::Error> for CliError {
    fn from(e: elastophase_core::Error) -> Self {
        use elastophase_core::Error as E;
        match e {
            E::NonFinite { .. } | E::NumericalFailure { .. } => CliError::Numerical(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Validation(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

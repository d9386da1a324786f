use thiserror::Error;

/// Process exit codes.
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_NUMERIC: u8 = 3;
pub const EXIT_NOT_CONVERGED: u8 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] ggp_core::Error),
    #[error("schema violation {0}")]
    Schema(String),
    #[error("{0}")]
    Io(String),
    #[error("not converged: {0}")]
    NotConverged(String),
    #[error("oracle disagreement: {0}")]
    Disagreement(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(ggp_core::Error::Numeric(_)) | CliError::Disagreement(_) => EXIT_NUMERIC,
            CliError::Core(_) | CliError::Schema(_) | CliError::Io(_) => EXIT_CONFIG,
            CliError::NotConverged(_) => EXIT_NOT_CONVERGED,
        }
    }
}

pub fn io_error(what: &str, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{what}: {e}"))
}

use subnyquist::CsError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Flags or configuration that cannot describe a valid run.
    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Core(#[from] CsError),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    /// 2 for invalid input, 1 for environment failures.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(e) if e.is_validation() => 2,
            CliError::Core(_) => 1,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

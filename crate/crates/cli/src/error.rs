use exemplar_core::Error as CoreError;

/// Errors surfaced by the command line, each with a stable exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage error: {0}")]
    Usage(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Internal(_) => 3,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        let msg = e.to_string();
        match e {
            CoreError::InvalidArgument(_) | CoreError::TooLarge(_) => CliError::Usage(msg),
            CoreError::DimensionMismatch { .. }
            | CoreError::NonFinite { .. }
            | CoreError::IndexOutOfRange { .. }
            | CoreError::Configuration(_) => CliError::Data(msg),
            CoreError::Corruption(_) => CliError::Internal(msg),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

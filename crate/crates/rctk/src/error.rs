use std::path::PathBuf;

/// Exit code for caller mistakes: bad flags, configs, inputs.
pub const EXIT_VALIDATION: u8 = 2;
/// Exit code for numerical failures and failed checks.
pub const EXIT_NUMERICAL: u8 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] rctk_core::Error),
    #[error("{0}")]
    Invalid(String),
    #[error("{0}")]
    CheckFailed(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {source}", path.display())]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("{}: {source}", path.display())]
    Csv { path: PathBuf, source: csv::Error },
}

impl CliError {
    pub fn invalid(msg: impl Into<String>) -> Self {
        CliError::Invalid(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Self {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) if !e.is_validation() => EXIT_NUMERICAL,
            CliError::CheckFailed(_) => EXIT_NUMERICAL,
            _ => EXIT_VALIDATION,
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

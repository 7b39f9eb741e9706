use floqdyn_core::Error as CoreError;

/// Failure of a run, classified by exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Validation(String),
    #[error("numerical abort: {0}")]
    Numerical(String),
    #[error("I/O error: {0}")]
    Io(String),
}

impl CliError {
    /// 2 for validation, 3 for numerical aborts, 4 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 4,
        }
    }

    /// Core error raised while checking the key `key`.
    pub fn at(key: &str, e: CoreError) -> Self {
        match CliError::from(e) {
            CliError::Validation(m) => CliError::Validation(format!("{key}: {m}")),
            other => other,
        }
    }

    pub fn invalid(key: &str, msg: impl std::fmt::Display) -> Self {
        CliError::Validation(format!("{key}: {msg}"))
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::Construction(_) | CoreError::Argument(_) | CoreError::NotHermitian { .. } => {
                CliError::Validation(e.to_string())
            }
            CoreError::Singular(_) | CoreError::NumericalAbort(_) => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

use std::path::PathBuf;

/// Failure classes, each with its own process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("{0}")]
    Validation(String),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub const EXIT_PARSE: i32 = 3;
    pub const EXIT_VALIDATION: i32 = 4;
    pub const EXIT_RUNTIME: i32 = 5;

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse { .. } => Self::EXIT_PARSE,
            CliError::Validation(_) => Self::EXIT_VALIDATION,
            CliError::Io { .. } | CliError::Runtime(_) => Self::EXIT_RUNTIME,
        }
    }

    pub fn parse(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        CliError::Parse { path: path.into(), message: message.into() }
    }

    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        CliError::Io { context: context.into(), source }
    }
}

impl From<advdefer::Error> for CliError {
    fn from(e: advdefer::Error) -> Self {
        match e {
            advdefer::Error::Infeasible(m) => CliError::Validation(format!("infeasible: {m}")),
            other => CliError::Validation(other.to_string()),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

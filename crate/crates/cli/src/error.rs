use ssr_core::SsrError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("unknown configuration key `{0}`")]
    UnknownKey(String),

    #[error("out of range: {0}")]
    Range(String),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("numeric failure: {0}")]
    Numeric(String),
}

impl CliError {
    /// Process exit code: 2 for configuration errors, 3 for data and i/o
    /// errors, 4 for numeric failures during a run.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse { .. } | CliError::UnknownKey(_) | CliError::Range(_) => 2,
            CliError::Io(_) | CliError::Data(_) => 3,
            CliError::Numeric(_) => 4,
        }
    }
}

impl From<SsrError> for CliError {
    fn from(err: SsrError) -> Self {
        let msg = err.to_string();
        match err {
            SsrError::Range(_) => CliError::Range(msg),
            SsrError::Io(_) => CliError::Io(msg),
            SsrError::DegenerateFit { .. }
            | SsrError::InvalidProbabilityRow { .. }
            | SsrError::ZeroNormEmbedding { .. }
            | SsrError::Diverged { .. } => CliError::Numeric(msg),
            _ => CliError::Data(msg),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        CliError::Io(err.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(err: csv::Error) -> Self {
        CliError::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

use thiserror::Error;

/// Errors raised by the analysis layer.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("insufficient data: need at least {required} values, got {found}")]
    InsufficientData { required: usize, found: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("correlation undefined: {0} has zero variance")]
    UndefinedCorrelation(String),

    #[error("grouping error: {0}")]
    Grouping(String),

    #[error("collinearity: column '{0}' is linearly dependent on the preceding columns")]
    Collinearity(String),

    #[error("missing input for model term '{0}'")]
    MissingInput(String),

    #[error("I/O error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// Crate-wide error type. Variants that matter for callers: `Parse` carries
/// the offending file and line, `Degenerate` marks statistically undefined
/// inputs (zero variance, all-tied samples, zero margins).
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("duplicate visit_id \"{0}\"")]
    DuplicateVisit(String),

    #[error("visit \"{0}\" has no utterances")]
    EmptyVisit(String),

    #[error("unknown visit_id \"{visit_id}\" ({context})")]
    UnknownVisit { visit_id: String, context: String },

    #[error("signal \"{signal}\" is not ratable for role \"{role}\"")]
    SignalRole { signal: String, role: String },

    #[error("unknown signal token \"{0}\"")]
    UnknownSignal(String),

    #[error("{0}")]
    InvalidInput(String),

    #[error("class \"{0}\" has no examples")]
    MissingClass(&'static str),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn parse(path: &str, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.to_string(),
            line,
            message: message.into(),
        }
    }

    pub(crate) fn invalid(message: impl Into<String>) -> Self {
        Error::InvalidInput(message.into())
    }
}

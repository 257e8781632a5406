use thiserror::Error;

/// Broad failure class, used by front-ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorClass {
    Config,
    Data,
    Solver,
    Validation,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("schema error at {field}{}: {message}", row.map(|r| format!(" (row {r})")).unwrap_or_default())]
    Schema {
        field: String,
        row: Option<usize>,
        message: String,
    },

    #[error("topology error: {message} (cycle: {cycle:?})")]
    Topology { message: String, cycle: Vec<usize> },

    #[error("sample data error: {0}")]
    Samples(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("solver failure ({status}): {message}")]
    Solver { status: String, message: String },

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Config(_) => ErrorClass::Config,
            Error::Solver { .. } => ErrorClass::Solver,
            Error::Validation(_) => ErrorClass::Validation,
            Error::InvalidInput(_) => ErrorClass::Config,
            _ => ErrorClass::Data,
        }
    }

    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    pub(crate) fn schema(field: impl Into<String>, row: Option<usize>, message: impl Into<String>) -> Self {
        Error::Schema {
            field: field.into(),
            row,
            message: message.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

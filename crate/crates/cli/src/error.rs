use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at line {line}, column {column}: {msg}")]
    Parse { line: usize, column: usize, msg: String },

    #[error("invalid field `{field}`: {msg}")]
    Schema { field: String, msg: String },

    /// Sizes that do not fit together; `field` names the offending entry.
    #[error("dimension error in `{field}`: {msg}")]
    Dim { field: String, msg: String },

    #[error("unknown cone `{0}`")]
    UnknownCone(String),

    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Core(#[from] conecalc::Error),
}

impl CliError {
    pub(crate) fn schema(field: impl Into<String>, msg: impl Into<String>) -> Self {
        CliError::Schema { field: field.into(), msg: msg.into() }
    }

    pub(crate) fn dim(field: impl Into<String>, msg: impl Into<String>) -> Self {
        CliError::Dim { field: field.into(), msg: msg.into() }
    }

    /// Process exit code: 3 for unreadable or malformed input, 4 for bad
    /// arguments, 5 for failures inside a computation.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } | CliError::Parse { .. } | CliError::Schema { .. } | CliError::Dim { .. } => 3,
            CliError::UnknownCone(_) | CliError::Usage(_) => 4,
            CliError::Core(
                conecalc::Error::NonSquare { .. } | conecalc::Error::DimMismatch { .. } | conecalc::Error::NonHermitian { .. },
            ) => 3,
            CliError::Core(conecalc::Error::UnknownSuite(_) | conecalc::Error::BadK { .. }) => 4,
            CliError::Core(_) => 5,
        }
    }
}

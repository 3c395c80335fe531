use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not Hermitian (max asymmetry {deviation:.3e})")]
    NonHermitian { deviation: f64 },

    #[error("matrix is not square ({rows}x{cols})")]
    NonSquare { rows: usize, cols: usize },

    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimMismatch {
        context: String,
        expected: String,
        found: String,
    },

    #[error("action is not linear (deviation {deviation:.3e})")]
    NonLinearAction { deviation: f64 },

    #[error("Schmidt/positivity level k = {k} outside 1..={max}")]
    BadK { k: usize, max: usize },

    #[error("cone level m = {m} outside 1..={cap}")]
    BadLevel { m: usize, cap: usize },

    #[error("cone has no generators")]
    EmptyCone,

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("cone is not right-CP-invariant: {0}")]
    NotRightCpInvariant(String),

    #[error("precondition failed: {0}")]
    PreconditionFailed(String),

    #[error("unregistered cone/system pair: {0}")]
    UnregisteredPair(String),

    #[error("unknown verification suite `{0}`")]
    UnknownSuite(String),
}

impl Error {
    pub(crate) fn dims(context: impl Into<String>, expected: impl ToString, found: impl ToString) -> Self {
        Error::DimMismatch {
            context: context.into(),
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }
}

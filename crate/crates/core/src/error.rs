use thiserror::Error;

/// Every failure the library can report.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not Hermitian: ||A - A*|| = {deviation:.3e}")]
    NotHermitian { deviation: f64 },

    #[error("{what} did not converge: {detail}")]
    NoConvergence { what: &'static str, detail: String },

    #[error("argument {value:e} outside the domain of {function}")]
    DomainViolation { function: &'static str, value: f64 },

    #[error("dimension mismatch: {0}")]
    DimMismatch(String),

    #[error("rank {rank} invalid for dimension {dim}")]
    BadRank { rank: usize, dim: usize },

    #[error("support mismatch: {0}")]
    SupportMismatch(String),

    #[error("invalid channel: {0}")]
    InvalidChannel(String),

    #[error("singular state: {0}")]
    SingularState(String),

    #[error("regularized values diverge (last increment {increment:.3e})")]
    Diverging { increment: f64 },

    #[error("beta = {0} is outside (0, 1)")]
    BadBeta(f64),

    #[error("family {0} has no integral representation")]
    MissingMeasureParams(String),

    #[error("not a density matrix: {0}")]
    InvalidState(String),

    #[error("{source_name}:{line}:{column}: {message}")]
    Parse {
        source_name: String,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn parse(source_name: &str, err: &serde_json::Error) -> Self {
        Error::Parse {
            source_name: source_name.to_string(),
            line: err.line(),
            column: err.column(),
            message: err.to_string(),
        }
    }
}

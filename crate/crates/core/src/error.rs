use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EmError {
    #[error("quadrature did not converge: N vs 2N discrepancy {discrepancy:e} exceeds budget {budget:e}")]
    NonConvergence { discrepancy: f64, budget: f64 },

    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("degenerate state: {0}")]
    DegenerateState(String),

    #[error("matrix is not symmetric positive definite")]
    NotPositiveDefinite,

    #[error("degenerate posterior weights: {0}")]
    DegenerateWeights(String),

    #[error("insufficient data: need at least {needed}, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("invalid config at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("i/o failure: {0}")]
    Io(String),
}

impl EmError {
    /// Stable machine-readable tag used in CLI error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            EmError::NonConvergence { .. } => "non_convergence",
            EmError::Domain(_) => "domain_error",
            EmError::DimensionMismatch { .. } => "dimension_mismatch",
            EmError::DegenerateState(_) => "degenerate_state",
            EmError::NotPositiveDefinite => "not_positive_definite",
            EmError::DegenerateWeights(_) => "degenerate_weights",
            EmError::InsufficientData { .. } => "insufficient_data",
            EmError::Config { .. } => "config_error",
            EmError::Io(_) => "io_error",
        }
    }

    pub(crate) fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        EmError::Config { path: path.into(), message: message.into() }
    }
}

impl From<std::io::Error> for EmError {
    fn from(e: std::io::Error) -> Self {
        EmError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, EmError>;

use thiserror::Error;

/// Errors produced by the solvers, the AID loop and the data loaders.
#[derive(Debug, Error)]
pub enum AidError {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("{source_name}: line {line}: {message}")]
    Parse {
        source_name: String,
        line: usize,
        message: String,
    },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("malformed model file: {0}")]
    ModelFormat(String),

    #[error("solver did not converge after {iterations} iterations (KKT violation {violation:.3e})")]
    NonConvergence { iterations: usize, violation: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl AidError {
    pub(crate) fn parse(source_name: &str, line: usize, message: impl Into<String>) -> Self {
        AidError::Parse {
            source_name: source_name.to_string(),
            line,
            message: message.into(),
        }
    }

    /// True for errors caused by the data rather than by the caller or the solver.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            AidError::InvalidInput(_) | AidError::Parse { .. } | AidError::Io(_) | AidError::ModelFormat(_)
        )
    }

    pub fn is_solver_error(&self) -> bool {
        matches!(self, AidError::NonConvergence { .. } | AidError::Numerical(_))
    }
}

pub type Result<T> = std::result::Result<T, AidError>;

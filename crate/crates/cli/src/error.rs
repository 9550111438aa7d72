use peierls_core::{BoundsError, EnumerationError, LatticeError, McError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("cap exceeded: {0}")]
    Cap(String),
    #[error("{0}")]
    Mismatch(String),
    #[error("computation failed: {0}")]
    Internal(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Argument(_) => 2,
            CliError::Cap(_) => 3,
            _ => 1,
        }
    }
}

impl From<EnumerationError> for CliError {
    fn from(e: EnumerationError) -> Self {
        match e {
            EnumerationError::CapExceeded { .. } | EnumerationError::Incomplete { .. } => CliError::Cap(e.to_string()),
            EnumerationError::InvalidArgument(msg) => CliError::Argument(msg),
            EnumerationError::Geometry(g) => CliError::Internal(g.to_string()),
        }
    }
}

impl From<BoundsError> for CliError {
    fn from(e: BoundsError) -> Self {
        match e {
            BoundsError::Enumeration(inner) => inner.into(),
            BoundsError::InsufficientData { needed, have } => {
                CliError::Argument(format!("counts up to length {have} are too few, need {needed}; raise --k-max"))
            }
            BoundsError::InvalidArgument(msg) => CliError::Argument(msg),
            other => CliError::Argument(other.to_string()),
        }
    }
}

impl From<McError> for CliError {
    fn from(e: McError) -> Self {
        match e {
            McError::InvalidArgument(msg) => CliError::Argument(msg),
            McError::Lattice(l) => l.into(),
        }
    }
}

impl From<LatticeError> for CliError {
    fn from(e: LatticeError) -> Self {
        CliError::Argument(e.to_string())
    }
}

use thiserror::Error;

pub type Result<T, E = LabError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("config error: {0}")]
    Config(String),

    #[error("config error at line {line}: {message}")]
    ConfigLine { line: usize, message: String },

    #[error(transparent)]
    Solver(#[from] navier_slip::Error),

    #[error("incompatible data: compatibility defect {defect:.3e} exceeds {tolerance:.0e}")]
    IncompatibleData { defect: f64, tolerance: f64 },

    #[error(transparent)]
    Persistence(#[from] crate::persistence::PersistenceError),
}

impl LabError {
    pub fn config(msg: impl Into<String>) -> Self {
        LabError::Config(msg.into())
    }

    /// Process exit code: 2 for configuration problems, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Config(_) | LabError::ConfigLine { .. } => 2,
            _ => 1,
        }
    }
}

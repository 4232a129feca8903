use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LabError {
    #[error("input shape: {0}")]
    InputShape(String),
    #[error("budget exceeded: {0}")]
    Budget(String),
    #[error("parameter: {0}")]
    Parameter(String),
    #[error("parse: {0}")]
    Parse(String),
    #[error("oracle failure: {0}")]
    Oracle(String),
    #[error("design construction stuck at set {index}: {reason}")]
    DesignStuck { index: usize, reason: String },
}

pub type Result<T> = std::result::Result<T, LabError>;

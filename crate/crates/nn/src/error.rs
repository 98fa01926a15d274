use thiserror::Error;

#[derive(Debug, Error)]
pub enum NnError {
    #[error("{what} has dimension {got}, expected {expected}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("non-finite value in block {block}")]
    NonFinite { block: &'static str },
    #[error("target update rate {0} outside [0, 1]")]
    InvalidTau(f64),
    #[error("temperature must be positive, got {0}")]
    InvalidTemperature(f64),
    #[error("bad checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

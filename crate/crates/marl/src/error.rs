use thiserror::Error;

#[derive(Debug, Error)]
pub enum MarlError {
    #[error(transparent)]
    Nn(#[from] nn::NnError),
    #[error(transparent)]
    Game(#[from] coopgame::GameError),
    #[error("empty batch")]
    EmptyBatch,
    #[error("replay buffer holds {size} transitions, cannot sample {wanted}")]
    Underfilled { size: usize, wanted: usize },
    #[error("sample count must be at least 1")]
    ZeroSamples,
    #[error("{what} has length {got}, expected {expected}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("non-finite {what} during update")]
    NonFinite { what: &'static str },
    #[error("unknown algorithm {0:?}")]
    UnknownAlgorithm(String),
    #[error("bad checkpoint bundle: {0}")]
    Bundle(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

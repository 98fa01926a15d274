use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EnvError {
    #[error("expected {expected} actions, got {got}")]
    Arity { expected: usize, got: usize },
    #[error("agent {agent}: action {action} outside 0..{n_actions}")]
    ActionOutOfRange {
        agent: usize,
        action: usize,
        n_actions: usize,
    },
    #[error("unknown environment {0:?}")]
    UnknownEnv(String),
    #[error("unknown traffic difficulty {0:?}")]
    UnknownDifficulty(String),
    #[error("step called on a finished episode; reset first")]
    EpisodeOver,
}

use std::io;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config: {0}")]
    Config(String),
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("invalid value for `{key}`: {reason}")]
    InvalidValue { key: String, reason: String },
    #[error(transparent)]
    Env(#[from] envs::EnvError),
    #[error(transparent)]
    Marl(#[from] marl::MarlError),
    #[error(transparent)]
    Game(#[from] coopgame::GameError),
    #[error("non-finite {what} at episode {episode}, step {step}")]
    NonFiniteLoss { what: &'static str, episode: usize, step: usize },
    #[error("checkpoint holds {found} networks but {wanted} was expected")]
    Mismatch { found: String, wanted: String },
    #[error("correlation undefined: {0}")]
    ZeroVariance(&'static str),
    #[error("{0} needs at least {1} values")]
    TooFew(&'static str, usize),
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl HarnessError {
    /// Errors a user fixes by changing the command line or config file.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Self::Config(_) | Self::UnknownKey(_) | Self::InvalidValue { .. } | Self::Env(envs::EnvError::UnknownEnv(_))
        ) || matches!(self, Self::Env(envs::EnvError::UnknownDifficulty(_)) | Self::Marl(marl::MarlError::UnknownAlgorithm(_)))
    }
}

//! Multi-agent actor-critic learners for global-reward games.
//!
//! [`Algorithm::Sqddpg`] trains one approximate-marginal-contribution critic
//! per agent and credits each agent with its sampled Shapley Q-value. The
//! baselines share the same networks, replay and update schedule where
//! their definitions allow.

mod a2c;
pub mod amc;
mod bundle;
mod ddpg;
mod error;
mod learner;
mod net;
pub mod policy;
mod replay;

use std::fmt;
use std::str::FromStr;

pub use a2c::{coma_advantage, discounted_returns, A2cLearner};
pub use amc::{amc_input, approx_shapley_q, approx_shapley_q_with, exact_shapley_q, ordered_prefixes};
pub use bundle::{Bundle, Manifest};
pub use ddpg::{
    actor_objective, critic_rows, sqddpg_critic_loss, ActorTerms, CriticKind, CriticRows, DdpgLearner,
};
pub use error::MarlError;
pub use learner::{build_learner, Learner, UpdateStats};
pub use net::Trained;
pub use replay::{Batch, ReplayBuffer, Transition};

pub type Result<T> = std::result::Result<T, MarlError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    Sqddpg,
    Iddpg,
    Maddpg,
    Ia2c,
    Coma,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [
        Algorithm::Sqddpg,
        Algorithm::Iddpg,
        Algorithm::Maddpg,
        Algorithm::Ia2c,
        Algorithm::Coma,
    ];

    pub fn on_policy(self) -> bool {
        matches!(self, Algorithm::Ia2c | Algorithm::Coma)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Sqddpg => "sqddpg",
            Algorithm::Iddpg => "iddpg",
            Algorithm::Maddpg => "maddpg",
            Algorithm::Ia2c => "ia2c",
            Algorithm::Coma => "coma",
        })
    }
}

impl FromStr for Algorithm {
    type Err = MarlError;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.to_string() == s)
            .ok_or_else(|| MarlError::UnknownAlgorithm(s.into()))
    }
}

/// Everything a learner needs besides the environment dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct LearnerConfig {
    pub algorithm: Algorithm,
    pub hidden: usize,
    pub gamma: f64,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub tau: f64,
    pub target_update_freq: usize,
    pub behaviour_update_freq: usize,
    pub entropy_coef: f64,
    pub batch_size: usize,
    /// Sampled coalition orders per Shapley Q-value estimate.
    pub sample_size: usize,
    pub replay_capacity: usize,
    /// Entrywise gradient clip applied before every optimizer step.
    pub grad_clip: f64,
}

impl LearnerConfig {
    pub fn new(algorithm: Algorithm) -> Self {
        Self {
            algorithm,
            hidden: 32,
            gamma: 0.9,
            actor_lr: 1e-4,
            critic_lr: 1e-3,
            tau: 0.1,
            target_update_freq: 200,
            behaviour_update_freq: 100,
            entropy_coef: 1e-2,
            batch_size: 32,
            sample_size: 1,
            replay_capacity: 10_000,
            grad_clip: 1.0,
        }
    }
}

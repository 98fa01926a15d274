use envs::EnvSpec;
use nn::Mlp;
use rand::RngCore;

use crate::policy::select_actions;
use crate::{A2cLearner, Algorithm, DdpgLearner, LearnerConfig, MarlError, Result, Transition};

/// Losses before the optimizer step of one update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdateStats {
    pub critic_loss: f64,
    pub actor_loss: f64,
}

pub(crate) fn check_finite(v: f64, what: &'static str) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(MarlError::NonFinite { what })
    }
}

/// The interface the training loop drives.
pub trait Learner: Send {
    fn algorithm(&self) -> Algorithm;
    fn spec(&self) -> EnvSpec;
    /// Decentralized: agent `i` reads only its actor and its observation.
    fn act(&self, state: &[f64], explore: bool, rng: &mut dyn RngCore) -> Result<Vec<usize>>;
    /// Records a transition and runs whatever updates are due.
    fn observe(&mut self, t: Transition, rng: &mut dyn RngCore) -> Result<Option<UpdateStats>>;
    /// Per-agent credit for taking `actions` in `state`: the Shapley
    /// Q-value for SQDDPG, the agent's critic value for the baselines.
    fn credits(&self, state: &[f64], actions: &[usize], rng: &mut dyn RngCore) -> Result<Vec<f64>>;
    fn actors(&self) -> Vec<&Mlp>;
    fn critics(&self) -> Vec<&Mlp>;
    /// Replaces live (and target) networks, resetting optimizer state.
    fn restore(&mut self, actors: Vec<Mlp>, critics: Vec<Mlp>) -> Result<()>;
}

impl Learner for DdpgLearner {
    fn algorithm(&self) -> Algorithm {
        self.config().algorithm
    }

    fn spec(&self) -> EnvSpec {
        DdpgLearner::spec(self)
    }

    fn act(&self, state: &[f64], explore: bool, rng: &mut dyn RngCore) -> Result<Vec<usize>> {
        select_actions(&self.actor_mlps(), state, explore, rng)
    }

    fn observe(&mut self, t: Transition, rng: &mut dyn RngCore) -> Result<Option<crate::UpdateStats>> {
        self.push_and_maybe_update(t, rng)
    }

    fn credits(&self, state: &[f64], actions: &[usize], rng: &mut dyn RngCore) -> Result<Vec<f64>> {
        self.credits_for(state, actions, rng)
    }

    fn actors(&self) -> Vec<&Mlp> {
        self.actor_mlps()
    }

    fn critics(&self) -> Vec<&Mlp> {
        self.critic_mlps()
    }

    fn restore(&mut self, actors: Vec<Mlp>, critics: Vec<Mlp>) -> Result<()> {
        DdpgLearner::restore(self, actors, critics)
    }
}

impl Learner for A2cLearner {
    fn algorithm(&self) -> Algorithm {
        self.config().algorithm
    }

    fn spec(&self) -> EnvSpec {
        A2cLearner::spec(self)
    }

    fn act(&self, state: &[f64], explore: bool, rng: &mut dyn RngCore) -> Result<Vec<usize>> {
        select_actions(&self.actor_mlps(), state, explore, rng)
    }

    fn observe(&mut self, t: Transition, rng: &mut dyn RngCore) -> Result<Option<UpdateStats>> {
        self.push_and_maybe_update(t, rng)
    }

    fn credits(&self, state: &[f64], actions: &[usize], _rng: &mut dyn RngCore) -> Result<Vec<f64>> {
        self.credits_for(state, actions)
    }

    fn actors(&self) -> Vec<&Mlp> {
        self.actor_mlps()
    }

    fn critics(&self) -> Vec<&Mlp> {
        self.critic_mlps()
    }

    fn restore(&mut self, actors: Vec<Mlp>, critics: Vec<Mlp>) -> Result<()> {
        A2cLearner::restore(self, actors, critics)
    }
}

pub fn build_learner(cfg: LearnerConfig, spec: EnvSpec, rng: &mut dyn RngCore) -> Box<dyn Learner> {
    if cfg.algorithm.on_policy() {
        Box::new(A2cLearner::new(cfg, spec, rng))
    } else {
        Box::new(DdpgLearner::new(cfg, spec, rng))
    }
}

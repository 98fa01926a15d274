use nn::{adam_step, soft_update, AdamState, Grads, Mlp};
use rand::RngCore;

use crate::Result;

/// A live network, its slowly tracking target copy and the optimizer state.
#[derive(Debug, Clone)]
pub struct Trained {
    pub live: Mlp,
    pub target: Mlp,
    opt: AdamState,
}

impl Trained {
    pub fn new(in_dim: usize, hidden: usize, out_dim: usize, lr: f64, rng: &mut dyn RngCore) -> Self {
        let live = Mlp::new(in_dim, hidden, out_dim, rng);
        Self::from_mlp(live, lr)
    }

    pub fn from_mlp(live: Mlp, lr: f64) -> Self {
        let opt = AdamState::new(&live, lr);
        Self {
            target: live.clone(),
            live,
            opt,
        }
    }

    /// Clips entrywise and takes one Adam step.
    pub fn apply(&mut self, mut grads: Grads, clip: f64) -> Result<()> {
        grads.clip(clip);
        adam_step(&mut self.live, &grads, &mut self.opt)?;
        Ok(())
    }

    pub fn track(&mut self, tau: f64) -> Result<()> {
        soft_update(&mut self.target, &self.live, tau)?;
        Ok(())
    }

    pub fn steps(&self) -> u64 {
        self.opt.step_count()
    }
}

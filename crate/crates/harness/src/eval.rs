//! Evaluation rollouts. Nothing here can update a learner: policies only
//! borrow it immutably.

use envs::{Difficulty, EnvKind, EnvStep, Environment};
use marl::Learner;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::Result;

/// Episode `k` of an evaluation seeded with `seed` draws from stream `k` of
/// `ChaCha8Rng::seed_from_u64(seed)`, so episodes are independent of how
/// many ran before them.
pub fn episode_rng(seed: u64, episode: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(episode as u64);
    rng
}

#[derive(Clone, Copy)]
pub enum Policy<'a> {
    /// Argmax of each actor, no exploration.
    Greedy(&'a dyn Learner),
    /// Gumbel-sampled actions of each actor.
    Sampled(&'a dyn Learner),
    Uniform,
    Constant(usize),
}

impl Policy<'_> {
    pub fn actions(&self, step: &EnvStep, n_actions: usize, rng: &mut dyn RngCore) -> Result<Vec<usize>> {
        let n = step.observations.len();
        Ok(match self {
            Policy::Greedy(l) => l.act(&step.global_state, false, rng)?,
            Policy::Sampled(l) => l.act(&step.global_state, true, rng)?,
            Policy::Uniform => (0..n).map(|_| rng.random_range(0..n_actions)).collect(),
            Policy::Constant(a) => vec![*a; n],
        })
    }
}

/// What one evaluation episode produced.
#[derive(Debug, Clone, PartialEq)]
pub struct Episode {
    pub steps: usize,
    pub total_reward: f64,
    pub collisions: usize,
    /// Step (1-based) on which the prey was caught.
    pub captured_at: Option<usize>,
}

impl Episode {
    pub fn mean_reward(&self) -> f64 {
        self.total_reward / self.steps.max(1) as f64
    }
}

/// Runs one episode of at most `max_steps` steps.
pub fn rollout(env: &mut dyn Environment, policy: Policy<'_>, max_steps: usize, rng: &mut dyn RngCore) -> Result<Episode> {
    let n_actions = env.spec().n_actions;
    let mut step = env.reset(rng);
    let mut ep = Episode {
        steps: 0,
        total_reward: 0.0,
        collisions: 0,
        captured_at: None,
    };
    while ep.steps < max_steps {
        let actions = policy.actions(&step, n_actions, rng)?;
        step = env.step(&actions, rng)?;
        ep.steps += 1;
        ep.total_reward += step.reward;
        ep.collisions += step.info.collisions;
        if step.info.captured && ep.captured_at.is_none() {
            ep.captured_at = Some(ep.steps);
        }
        if step.finished() {
            break;
        }
    }
    Ok(ep)
}

pub fn rollouts(kind: EnvKind, policy: Policy<'_>, episodes: usize, max_steps: usize, seed: u64) -> Result<Vec<Episode>> {
    let mut env = kind.build();
    (0..episodes)
        .map(|k| rollout(env.as_mut(), policy, max_steps, &mut episode_rng(seed, k)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuccessRate {
    pub successes: usize,
    pub episodes: usize,
}

impl SuccessRate {
    pub fn rate(&self) -> f64 {
        self.successes as f64 / self.episodes.max(1) as f64
    }
}

/// Fraction of `episodes` greedy-or-otherwise runs of `steps` steps with no
/// collision.
pub fn evaluate_success_rate(
    difficulty: Difficulty,
    policy: Policy<'_>,
    episodes: usize,
    steps: usize,
    seed: u64,
) -> Result<SuccessRate> {
    let eps = rollouts(EnvKind::Traffic(difficulty), policy, episodes, steps, seed)?;
    Ok(SuccessRate {
        successes: eps.iter().filter(|e| e.collisions == 0).count(),
        episodes,
    })
}

/// Turns until capture per episode; an episode without capture counts as
/// `limit`.
pub fn turns_to_capture(policy: Policy<'_>, episodes: usize, limit: usize, seed: u64) -> Result<Vec<usize>> {
    Ok(rollouts(EnvKind::Prey, policy, episodes, limit, seed)?
        .into_iter()
        .map(|e| e.captured_at.unwrap_or(limit))
        .collect())
}

pub fn median(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[m] } else { 0.5 * (v[m - 1] + v[m]) })
}

use rand::seq::SliceRandom;
use rand::Rng;

use crate::{
    CharacteristicGame, Coalition, GameError, OrderedCoalition, PayoffVector, Result,
    MAX_EXACT_AGENTS,
};

/// `δᵢ(C) = v(C ∪ {i}) − v(C)`.
pub fn marginal_contribution(
    game: &CharacteristicGame,
    coalition: Coalition,
    agent: usize,
) -> Result<f64> {
    game.check_agent(agent)?;
    if !coalition.is_subset_of(game.grand_coalition()) {
        return Err(GameError::CoalitionOutOfRange {
            coalition,
            n: game.n(),
        });
    }
    if coalition.contains(agent) {
        return Err(GameError::AgentInCoalition { agent, coalition });
    }
    Ok(game.value(coalition.with(agent)) - game.value(coalition))
}

/// Probability that a uniformly random join order places exactly a given
/// set of `c` agents ahead of the joiner: `c!(n−c−1)!/n!`.
pub fn coalition_weight(n: usize, c: usize) -> Result<f64> {
    if n == 0 {
        return Err(GameError::InvalidGame("agent count must be at least 1".into()));
    }
    if c >= n {
        return Err(GameError::CoalitionSize { size: c, n });
    }
    Ok(1.0 / (n as f64 * binomial(n - 1, c)))
}

fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, j| acc * (n - j) as f64 / (j + 1) as f64)
}

/// Exact Shapley value by enumerating all `2^(n-1)` coalitions per agent.
pub fn exact_shapley(game: &CharacteristicGame) -> Result<PayoffVector> {
    game.check_capacity("exact_shapley", MAX_EXACT_AGENTS)?;
    let n = game.n();
    let weights: Vec<f64> = (0..n)
        .map(|c| coalition_weight(n, c))
        .collect::<Result<_>>()?;
    let full = game.grand_coalition();

    let x = (0..n)
        .map(|i| {
            let rest = full.without(i);
            // the empty coalition is not yielded by `subsets`
            let empty = weights[0] * game.value(Coalition::singleton(i));
            rest.subsets().fold(empty, |acc, c| {
                acc + weights[c.len()] * (game.value(c.with(i)) - game.value(c))
            })
        })
        .collect();
    PayoffVector::new(x)
}

/// Draws a uniform random permutation of the `n` agents and returns the
/// ordered prefix preceding `agent`.
pub fn sample_ordered_coalition<R: Rng + ?Sized>(
    rng: &mut R,
    agent: usize,
    n: usize,
) -> Result<OrderedCoalition> {
    if agent >= n {
        return Err(GameError::AgentOutOfRange { agent, n });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let pos = order.iter().position(|&a| a == agent).expect("agent in permutation");
    order.truncate(pos);
    Ok(OrderedCoalition::new_unchecked(agent, order))
}

/// Sample mean with its spread, from a Monte-Carlo run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    /// Unbiased sample standard deviation (0 for a single sample).
    pub std_dev: f64,
    pub samples: usize,
}

impl Estimate {
    /// Welford mean and spread of a stream; `None` when it is empty.
    pub fn from_values<I: IntoIterator<Item = f64>>(values: I) -> Option<Self> {
        let (mut mean, mut m2, mut k) = (0.0, 0.0, 0usize);
        for x in values {
            k += 1;
            let d = x - mean;
            mean += d / k as f64;
            m2 += d * (x - mean);
        }
        if k == 0 {
            return None;
        }
        let std_dev = if k > 1 { (m2 / (k - 1) as f64).sqrt() } else { 0.0 };
        Some(Self {
            mean,
            std_dev,
            samples: k,
        })
    }

    pub fn std_error(&self) -> f64 {
        self.std_dev / (self.samples as f64).sqrt()
    }
}

/// Permutation-sampling estimate of agent `agent`'s Shapley value:
/// the mean of `samples` marginal contributions to sampled coalitions.
pub fn monte_carlo_shapley_estimate<R: Rng + ?Sized>(
    game: &CharacteristicGame,
    agent: usize,
    samples: usize,
    rng: &mut R,
) -> Result<Estimate> {
    game.check_agent(agent)?;
    if samples == 0 {
        return Err(GameError::ZeroSamples);
    }
    let mut draws = Vec::with_capacity(samples);
    for _ in 0..samples {
        let c = sample_ordered_coalition(rng, agent, game.n())?.coalition();
        draws.push(game.value(c.with(agent)) - game.value(c));
    }
    Estimate::from_values(draws).ok_or(GameError::ZeroSamples)
}

pub fn monte_carlo_shapley<R: Rng + ?Sized>(
    game: &CharacteristicGame,
    agent: usize,
    samples: usize,
    rng: &mut R,
) -> Result<f64> {
    monte_carlo_shapley_estimate(game, agent, samples, rng).map(|e| e.mean)
}

//! Inputs of the approximate marginal contribution (AMC) critics and the
//! Shapley Q-value estimates built on them.
//!
//! An AMC input is the global state followed by `n` action slots. Slot `k`
//! holds the action of the `k`-th agent in the join order (coalition members
//! first, the joining agent last); slots past the joiner stay zero.

use coopgame::{sample_ordered_coalition, Estimate, OrderedCoalition};
use ndarray::Array2;
use nn::Mlp;
use rand::RngCore;

use crate::{MarlError, Result};

/// Exact prefix enumeration is used up to this many agents.
pub const MAX_EXACT_AGENTS: usize = 6;

pub fn amc_input(state: &[f64], order: &OrderedCoalition, joint_actions: &[Vec<f64>]) -> Result<Vec<f64>> {
    let n = joint_actions.len();
    let a = joint_actions.first().map_or(0, Vec::len);
    if let Some(bad) = joint_actions.iter().find(|v| v.len() != a) {
        return Err(MarlError::Dimension {
            what: "action vector",
            expected: a,
            got: bad.len(),
        });
    }
    if let Some(agent) = order.join_order().find(|&j| j >= n) {
        return Err(MarlError::Dimension {
            what: "join order agent",
            expected: n,
            got: agent,
        });
    }
    let mut out = Vec::with_capacity(state.len() + n * a);
    out.extend_from_slice(state);
    out.resize(state.len() + n * a, 0.0);
    for (slot, agent) in order.join_order().enumerate() {
        let at = state.len() + slot * a;
        out[at..at + a].copy_from_slice(&joint_actions[agent]);
    }
    Ok(out)
}

/// Writes the action block for `order` into `dst` (length `n·a`, zeroed by
/// the caller) from a flat joint action `joint` laid out by agent index.
pub(crate) fn write_action_block(dst: &mut [f64], order: &OrderedCoalition, joint: &[f64], a: usize) {
    for (slot, agent) in order.join_order().enumerate() {
        dst[slot * a..(slot + 1) * a].copy_from_slice(&joint[agent * a..(agent + 1) * a]);
    }
}

/// Mean and spread of `amc` over `samples` uniformly sampled coalitions
/// that `agent` joins. `amc` stands in for the learned critic, so an exact
/// marginal-contribution table turns this into a Shapley value estimate.
pub fn approx_shapley_q_with<F>(
    agent: usize,
    n: usize,
    samples: usize,
    rng: &mut dyn RngCore,
    mut amc: F,
) -> Result<Estimate>
where
    F: FnMut(&OrderedCoalition) -> f64,
{
    if samples == 0 {
        return Err(MarlError::ZeroSamples);
    }
    let mut values = Vec::with_capacity(samples);
    for _ in 0..samples {
        values.push(amc(&sample_ordered_coalition(rng, agent, n)?));
    }
    Estimate::from_values(values).ok_or(MarlError::ZeroSamples)
}

fn amc_rows(state: &[f64], orders: &[OrderedCoalition], joint_actions: &[Vec<f64>]) -> Result<Array2<f64>> {
    let n = joint_actions.len();
    let a = joint_actions.first().map_or(0, Vec::len);
    let mut x = Array2::zeros((orders.len(), state.len() + n * a));
    for (row, o) in x.rows_mut().into_iter().zip(orders) {
        let input = amc_input(state, o, joint_actions)?;
        row.into_slice().expect("row-major").copy_from_slice(&input);
    }
    Ok(x)
}

/// `Q^Φᵢ(s, a) ≈ (1/M) Σ_m AMCᵢ(s, a_{C_m ∪ {i}})` with `M = samples`.
pub fn approx_shapley_q(
    critic: &Mlp,
    agent: usize,
    state: &[f64],
    joint_actions: &[Vec<f64>],
    samples: usize,
    rng: &mut dyn RngCore,
) -> Result<f64> {
    if samples == 0 {
        return Err(MarlError::ZeroSamples);
    }
    let n = joint_actions.len();
    let orders = (0..samples)
        .map(|_| sample_ordered_coalition(rng, agent, n))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let q = critic.predict(amc_rows(state, &orders, joint_actions)?.view())?;
    Ok(q.mean().expect("non-empty"))
}

/// Every ordered coalition `agent` can join, with its probability under a
/// uniformly random permutation: `(n−1−|C|)!/n!`.
pub fn ordered_prefixes(agent: usize, n: usize) -> Result<Vec<(OrderedCoalition, f64)>> {
    if n > MAX_EXACT_AGENTS {
        return Err(MarlError::Dimension {
            what: "agents for exact enumeration",
            expected: MAX_EXACT_AGENTS,
            got: n,
        });
    }
    let others: Vec<usize> = (0..n).filter(|&j| j != agent).collect();
    let fact = |k: usize| (1..=k).map(|v| v as f64).product::<f64>();
    let mut out = Vec::new();
    let mut stack: Vec<Vec<usize>> = vec![Vec::new()];
    while let Some(prefix) = stack.pop() {
        let w = fact(n - 1 - prefix.len()) / fact(n);
        for &o in others.iter().rev() {
            if !prefix.contains(&o) {
                let mut next = prefix.clone();
                next.push(o);
                stack.push(next);
            }
        }
        out.push((OrderedCoalition::new(n, agent, prefix)?, w));
    }
    Ok(out)
}

/// The Shapley Q-value with the expectation over join orders taken exactly.
pub fn exact_shapley_q(critic: &Mlp, agent: usize, state: &[f64], joint_actions: &[Vec<f64>]) -> Result<f64> {
    let prefixes = ordered_prefixes(agent, joint_actions.len())?;
    let orders: Vec<OrderedCoalition> = prefixes.iter().map(|(o, _)| o.clone()).collect();
    let q = critic.predict(amc_rows(state, &orders, joint_actions)?.view())?;
    Ok(prefixes.iter().zip(q.column(0)).map(|((_, w), v)| w * v).sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn oc(n: usize, joiner: usize, members: &[usize]) -> OrderedCoalition {
        OrderedCoalition::new(n, joiner, members.to_vec()).unwrap()
    }

    #[test]
    fn block_follows_join_order() {
        let acts = vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]];
        let x = amc_input(&[9.0], &oc(3, 1, &[0, 2]), &acts).unwrap();
        assert_eq!(x, vec![9.0, 1.0, 0.0, 1.0, 1.0, 0.0, 1.0]);
        let x = amc_input(&[9.0], &oc(3, 0, &[]), &acts).unwrap();
        assert_eq!(x, vec![9.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let x = amc_input(&[], &oc(2, 0, &[1]), &acts[..2]).unwrap();
        assert_eq!(x, vec![0.0, 1.0, 1.0, 0.0]);
    }

    #[test]
    fn prefix_probabilities_sum_to_one() {
        for n in 1..=5 {
            let p = ordered_prefixes(0, n).unwrap();
            // Σ_c (n−1)!/(n−1−c)! orderings
            let count: usize = (0..n).map(|c| (n - c..n).product::<usize>()).sum();
            assert_eq!(p.len(), count);
            assert!((p.iter().map(|(_, w)| w).sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_samples_rejected() {
        let mut rng = rand::rng();
        assert!(matches!(
            approx_shapley_q_with(0, 3, 0, &mut rng, |_| 0.0),
            Err(MarlError::ZeroSamples)
        ));
    }
}

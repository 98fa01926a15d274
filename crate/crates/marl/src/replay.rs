use ndarray::Array2;
use rand::{Rng, RngCore};

use crate::{MarlError, Result};

/// One environment step. Actions are stored as indices; observations are
/// the per-agent chunks of the global state and are not stored separately.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: Vec<f64>,
    pub actions: Vec<usize>,
    pub reward: f64,
    pub next_state: Vec<f64>,
    /// Terminal: no bootstrapping from `next_state`.
    pub done: bool,
    /// Last step of the episode, terminal or truncated.
    pub episode_end: bool,
    pub active: Vec<bool>,
    pub next_active: Vec<bool>,
}

/// Column-stacked minibatch.
#[derive(Debug, Clone)]
pub struct Batch {
    pub states: Array2<f64>,
    pub next_states: Array2<f64>,
    /// `len × n_agents` action indices.
    pub actions: Array2<usize>,
    pub rewards: Vec<f64>,
    pub dones: Vec<bool>,
    pub episode_ends: Vec<bool>,
    /// `len × n_agents`, 1 for live slots.
    pub active: Array2<f64>,
    pub next_active: Array2<f64>,
}

impl Batch {
    pub fn from_transitions(ts: &[&Transition]) -> Result<Self> {
        let first = ts.first().ok_or(MarlError::EmptyBatch)?;
        let (g, s, n) = (ts.len(), first.state.len(), first.actions.len());
        for t in ts {
            if t.state.len() != s || t.next_state.len() != s {
                return Err(MarlError::Dimension {
                    what: "transition state",
                    expected: s,
                    got: t.state.len().max(t.next_state.len()),
                });
            }
            if t.actions.len() != n || t.active.len() != n || t.next_active.len() != n {
                return Err(MarlError::Dimension {
                    what: "transition actions",
                    expected: n,
                    got: t.actions.len(),
                });
            }
            if !t.reward.is_finite() {
                return Err(MarlError::NonFinite { what: "reward" });
            }
        }
        let flag = |b: bool| if b { 1.0 } else { 0.0 };
        Ok(Self {
            states: Array2::from_shape_fn((g, s), |(k, j)| ts[k].state[j]),
            next_states: Array2::from_shape_fn((g, s), |(k, j)| ts[k].next_state[j]),
            actions: Array2::from_shape_fn((g, n), |(k, i)| ts[k].actions[i]),
            rewards: ts.iter().map(|t| t.reward).collect(),
            dones: ts.iter().map(|t| t.done).collect(),
            episode_ends: ts.iter().map(|t| t.episode_end).collect(),
            active: Array2::from_shape_fn((g, n), |(k, i)| flag(ts[k].active[i])),
            next_active: Array2::from_shape_fn((g, n), |(k, i)| flag(ts[k].next_active[i])),
        })
    }

    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }

    pub fn n_agents(&self) -> usize {
        self.actions.ncols()
    }
}

/// Fixed-capacity ring; the oldest transition is overwritten first.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    items: Vec<Transition>,
    head: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        Self {
            capacity,
            items: Vec::with_capacity(capacity.min(1 << 16)),
            head: 0,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn push(&mut self, t: Transition) {
        if self.items.len() < self.capacity {
            self.items.push(t);
        } else {
            self.items[self.head] = t;
        }
        self.head = (self.head + 1) % self.capacity;
    }

    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        self.items.iter()
    }

    /// `g` draws uniform with replacement.
    pub fn sample(&self, g: usize, rng: &mut dyn RngCore) -> Result<Batch> {
        if g == 0 {
            return Err(MarlError::EmptyBatch);
        }
        if self.items.len() < g {
            return Err(MarlError::Underfilled {
                size: self.items.len(),
                wanted: g,
            });
        }
        let picks: Vec<&Transition> = (0..g).map(|_| &self.items[rng.random_range(0..self.items.len())]).collect();
        Batch::from_transitions(&picks)
    }
}

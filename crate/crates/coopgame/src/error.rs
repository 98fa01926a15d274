use thiserror::Error;

use crate::Coalition;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GameError {
    #[error("{op} supports at most {limit} agents, got {n}")]
    Capacity {
        op: &'static str,
        limit: usize,
        n: usize,
    },
    #[error("agent index {agent} out of range for {n} agents")]
    AgentOutOfRange { agent: usize, n: usize },
    #[error("agent {agent} is already a member of coalition {coalition}")]
    AgentInCoalition { agent: usize, coalition: Coalition },
    #[error("coalition {coalition} is not a subset of the {n}-agent set")]
    CoalitionOutOfRange { coalition: Coalition, n: usize },
    #[error("coalition size {size} must be smaller than the agent count {n}")]
    CoalitionSize { size: usize, n: usize },
    #[error("sample count must be at least 1")]
    ZeroSamples,
    #[error("payoff vector has {got} entries, expected {expected}")]
    PayoffLength { got: usize, expected: usize },
    #[error("game is not convex: v({c} | {d}) < v({c}) + v({d})")]
    NotConvex { c: Coalition, d: Coalition },
    #[error("invalid game: {0}")]
    InvalidGame(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

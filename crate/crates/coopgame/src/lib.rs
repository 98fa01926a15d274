//! Exact cooperative game theory for characteristic-function games.
//!
//! Coalitions are bitmasks over at most [`MAX_EXACT_AGENTS`] agents for the
//! exhaustive operations (Shapley values, convexity, core membership) and at
//! most [`MAX_STRUCTURE_AGENTS`] agents for coalition-structure enumeration.
//! The crate doubles as the ground-truth oracle for the learned, sampled
//! Shapley estimates elsewhere in the workspace.

mod coalition;
mod error;
mod game;
pub mod generate;
pub mod oracle;
mod properties;
mod shapley;

pub use coalition::{enumerate_coalition_structures, Coalition, CoalitionStructure, OrderedCoalition};
pub use error::GameError;
pub use game::{CharacteristicGame, PayoffVector};
pub use properties::{
    convexity_witness, core_violation, grand_coalition_optimality_check, in_core, is_convex,
    CoreViolation,
};
pub use shapley::{
    coalition_weight, exact_shapley, marginal_contribution, monte_carlo_shapley,
    monte_carlo_shapley_estimate, sample_ordered_coalition, Estimate,
};

/// Largest agent count accepted by the exhaustive `2^n` operations.
pub const MAX_EXACT_AGENTS: usize = 12;

/// Largest agent count accepted by coalition-structure enumeration (Bell growth).
pub const MAX_STRUCTURE_AGENTS: usize = 6;

/// Largest agent count a game table may hold at all.
pub const MAX_STORED_AGENTS: usize = 20;

/// Absolute tolerance for every equality-style comparison in this crate.
pub const TOLERANCE: f64 = 1e-9;

pub type Result<T> = std::result::Result<T, GameError>;

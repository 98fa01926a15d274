use crate::{
    enumerate_coalition_structures, CharacteristicGame, Coalition, GameError, PayoffVector,
    Result, MAX_EXACT_AGENTS, MAX_STRUCTURE_AGENTS, TOLERANCE,
};

/// First disjoint pair `(C, D)` with `v(C ∪ D) < v(C) + v(D)`, scanning `C`
/// then `D` in ascending bitmask order with `C < D`. `None` means the game is
/// superadditive (convex in the sense used throughout this crate).
pub fn convexity_witness(game: &CharacteristicGame) -> Result<Option<(Coalition, Coalition)>> {
    game.check_capacity("is_convex", MAX_EXACT_AGENTS)?;
    let full = game.grand_coalition();
    for c in full.subsets() {
        let rest = Coalition(full.bits() & !c.bits());
        let vc = game.value(c);
        for d in rest.subsets().filter(|d| d.bits() > c.bits()) {
            if game.value(c.union(d)) < vc + game.value(d) - TOLERANCE {
                return Ok(Some((c, d)));
            }
        }
    }
    Ok(None)
}

pub fn is_convex(game: &CharacteristicGame) -> Result<bool> {
    convexity_witness(game).map(|w| w.is_none())
}

/// Why a payoff vector falls outside the core.
#[derive(Debug, Clone, PartialEq)]
pub enum CoreViolation {
    /// `Σ xᵢ ≠ v(N)`.
    Inefficient { total: f64, grand_value: f64 },
    /// `x(C) < v(C)` for this coalition (lowest bitmask reported).
    Blocked(Coalition),
}

/// Checks efficiency and then every coalition constraint `x(C) ≥ v(C)`.
pub fn core_violation(game: &CharacteristicGame, x: &PayoffVector) -> Result<Option<CoreViolation>> {
    game.check_capacity("in_core", MAX_EXACT_AGENTS)?;
    if x.len() != game.n() {
        return Err(GameError::PayoffLength {
            got: x.len(),
            expected: game.n(),
        });
    }
    let total = x.total();
    if (total - game.grand_value()).abs() > TOLERANCE {
        return Ok(Some(CoreViolation::Inefficient {
            total,
            grand_value: game.grand_value(),
        }));
    }
    Ok(game
        .grand_coalition()
        .subsets()
        .find(|&c| x.coalition_total(c) < game.value(c) - TOLERANCE)
        .map(CoreViolation::Blocked))
}

pub fn in_core(game: &CharacteristicGame, x: &PayoffVector) -> Result<bool> {
    core_violation(game, x).map(|v| v.is_none())
}

/// Whether the grand coalition's value is at least the social value
/// `Σ_{C∈CS} v(C)` of every coalition structure. Convexity is the hypothesis,
/// so non-convex games are rejected.
pub fn grand_coalition_optimality_check(game: &CharacteristicGame) -> Result<bool> {
    game.check_capacity("grand_coalition_optimality_check", MAX_STRUCTURE_AGENTS)?;
    if let Some((c, d)) = convexity_witness(game)? {
        return Err(GameError::NotConvex { c, d });
    }
    let grand = game.grand_value();
    Ok(enumerate_coalition_structures(game.n())?.iter().all(|cs| {
        let social: f64 = cs.blocks().iter().map(|&b| game.value(b)).sum();
        grand >= social - TOLERANCE
    }))
}

//! Game constructors used by tests, the property suite and the CLI.

use rand::Rng;

use crate::{CharacteristicGame, Coalition, Result};

/// `v(C) = |C|`.
pub fn additive(n: usize) -> Result<CharacteristicGame> {
    CharacteristicGame::from_fn(n, |c| c.len() as f64)
}

/// Agents `0..left` hold left gloves, the next `right` agents hold right
/// gloves; `v(C)` is the number of matched pairs inside `C`.
pub fn glove(left: usize, right: usize) -> Result<CharacteristicGame> {
    CharacteristicGame::from_fn(left + right, |c| {
        let l = c.members().filter(|&i| i < left).count();
        let r = c.len() - l;
        l.min(r) as f64
    })
}

/// Values i.i.d. uniform on `[0, 1)` with `v(∅) = 0`.
pub fn random_uniform<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<CharacteristicGame> {
    CharacteristicGame::from_fn(n, |_| rng.random::<f64>())
}

/// `v(C) = Σ_{T ⊆ C} m(T)` with non-negative dividends `m(T)` drawn uniform
/// on `[0, 1)`. Non-negative dividends make `v` supermodular, hence convex
/// and with the Shapley value inside the core.
pub fn random_supermodular<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<CharacteristicGame> {
    let size = 1usize << n;
    let mut v: Vec<f64> = (0..size)
        .map(|c| if c == 0 { 0.0 } else { rng.random::<f64>() })
        .collect();
    // zeta transform over subsets
    for bit in 0..n {
        for c in 0..size {
            if c & (1 << bit) != 0 {
                v[c] += v[c ^ (1 << bit)];
            }
        }
    }
    CharacteristicGame::new(n, v)
}

/// Averages `game` with its image under swapping agents `i` and `j`, which
/// makes the two agents interchangeable.
pub fn symmetrize(game: &CharacteristicGame, i: usize, j: usize) -> Result<CharacteristicGame> {
    let swap = |c: Coalition| {
        let (hi, hj) = (c.contains(i), c.contains(j));
        let mut s = c.without(i).without(j);
        if hi {
            s = s.with(j);
        }
        if hj {
            s = s.with(i);
        }
        s
    };
    CharacteristicGame::from_fn(game.n(), |c| 0.5 * (game.value(c) + game.value(swap(c))))
}

/// Appends agent `n` whose presence never changes any coalition's value.
pub fn with_dummy(game: &CharacteristicGame) -> Result<CharacteristicGame> {
    let dummy = game.n();
    CharacteristicGame::from_fn(game.n() + 1, |c| game.value(c.without(dummy)))
}

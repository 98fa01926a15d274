//! The exhaustive property suite: Shapley axioms, core membership of the
//! Shapley value in convex games, grand-coalition optimality, sampler
//! consistency and estimator convergence.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::{
    coalition_weight, exact_shapley, generate, grand_coalition_optimality_check, in_core,
    monte_carlo_shapley_estimate, sample_ordered_coalition, Coalition, GameError, Result,
    TOLERANCE,
};

/// Draw count for the sampler and estimator checks.
pub const CHECK_DRAWS: usize = 100_000;
/// Significance floor for the sampler chi-square test.
pub const CHI_SQUARE_MIN_P: f64 = 0.001;
/// Estimator checks accept deviations up to this many standard errors.
pub const STD_ERROR_BOUND: f64 = 3.0;
/// Random games used by the estimator-convergence check.
pub const ESTIMATOR_GAMES: usize = 20;

#[derive(Debug, Clone)]
pub struct SuiteConfig {
    pub games: usize,
    pub seed: u64,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self { games: 200, seed: 7 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckRow {
    pub name: &'static str,
    pub passed: usize,
    pub total: usize,
    /// Gating rows decide the suite verdict. The per-comparison 3σ estimator
    /// row is reported only: across ~90 comparisons a correct estimator
    /// misses at least one about a quarter of the time.
    pub gating: bool,
}

impl CheckRow {
    fn gate(name: &'static str, passed: usize, total: usize) -> Self {
        Self { name, passed, total, gating: true }
    }

    pub fn ok(&self) -> bool {
        self.passed == self.total
    }
}

#[derive(Debug, Clone, Default)]
pub struct SuiteReport {
    pub rows: Vec<CheckRow>,
}

impl SuiteReport {
    pub fn all_passed(&self) -> bool {
        self.rows.iter().filter(|r| r.gating).all(CheckRow::ok)
    }

    pub fn row(&self, name: &str) -> Option<&CheckRow> {
        self.rows.iter().find(|r| r.name == name)
    }

    /// One `name: passed/total [PASS|FAIL]` line per check.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{}: {}/{} [{}]",
                r.name,
                r.passed,
                r.total,
                match (r.gating, r.ok()) {
                    (false, _) => "INFO",
                    (true, true) => "PASS",
                    (true, false) => "FAIL",
                }
            );
        }
        out
    }
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Pearson chi-square statistic of `draws` sampled coalitions (for `agent`
/// among `n`) against the exact subset probabilities. Returns `(statistic,
/// p-value)` with `2^(n-1) − 1` degrees of freedom.
pub fn sampler_chi_square<R: Rng + ?Sized>(
    n: usize,
    agent: usize,
    draws: usize,
    rng: &mut R,
) -> Result<(f64, f64)> {
    if n < 2 {
        return Err(GameError::InvalidGame("chi-square needs at least two agents".into()));
    }
    let mut counts = vec![0usize; 1 << n];
    for _ in 0..draws {
        counts[sample_ordered_coalition(rng, agent, n)?.coalition().index()] += 1;
    }
    let others = Coalition::full(n).without(agent);
    let mut stat = 0.0;
    let mut cells = 0usize;
    for c in std::iter::once(Coalition::EMPTY).chain(others.subsets()) {
        let expected = draws as f64 * coalition_weight(n, c.len())?;
        let d = counts[c.index()] as f64 - expected;
        stat += d * d / expected;
        cells += 1;
    }
    let dist = ChiSquared::new((cells - 1) as f64)
        .map_err(|e| GameError::InvalidGame(format!("chi-square: {e}")))?;
    Ok((stat, dist.sf(stat)))
}

pub fn run_suite(cfg: &SuiteConfig) -> Result<SuiteReport> {
    let mut rows = Vec::new();
    let games = cfg.games;

    let mut rng = stream(cfg.seed, 1);
    let mut passed = 0;
    for _ in 0..games {
        let n = rng.random_range(2..=8);
        let g = generate::random_uniform(n, &mut rng)?;
        let x = exact_shapley(&g)?;
        passed += usize::from((x.total() - g.grand_value()).abs() <= TOLERANCE);
    }
    rows.push(CheckRow::gate("efficiency", passed, games));

    let mut rng = stream(cfg.seed, 2);
    let mut passed = 0;
    for _ in 0..games {
        let n = rng.random_range(2..=8);
        let (i, j) = (rng.random_range(0..n), rng.random_range(0..n - 1));
        let j = if j >= i { j + 1 } else { j };
        let g = generate::symmetrize(&generate::random_uniform(n, &mut rng)?, i, j)?;
        let x = exact_shapley(&g)?;
        passed += usize::from((x[i] - x[j]).abs() <= TOLERANCE);
    }
    rows.push(CheckRow::gate("symmetry", passed, games));

    let mut rng = stream(cfg.seed, 3);
    let mut passed = 0;
    for _ in 0..games {
        let n = rng.random_range(1..=7);
        let g = generate::with_dummy(&generate::random_uniform(n, &mut rng)?)?;
        let x = exact_shapley(&g)?;
        passed += usize::from(x[n] == 0.0 || x[n].abs() <= TOLERANCE);
    }
    rows.push(CheckRow::gate("dummy", passed, games));

    let mut rng = stream(cfg.seed, 4);
    let mut passed = 0;
    for _ in 0..games {
        let n = rng.random_range(2..=8);
        let g = generate::random_supermodular(n, &mut rng)?;
        passed += usize::from(in_core(&g, &exact_shapley(&g)?)?);
    }
    rows.push(CheckRow::gate("core-membership", passed, games));

    let mut rng = stream(cfg.seed, 5);
    let mut passed = 0;
    for _ in 0..games {
        let n = rng.random_range(2..=5);
        let g = generate::random_supermodular(n, &mut rng)?;
        passed += usize::from(grand_coalition_optimality_check(&g)?);
    }
    rows.push(CheckRow::gate("grand-coalition-optimality", passed, games));

    let mut rng = stream(cfg.seed, 6);
    let mut passed = 0;
    let mut total = 0;
    for n in 2..=5 {
        for agent in [0, n - 1] {
            let (_, p) = sampler_chi_square(n, agent, CHECK_DRAWS, &mut rng)?;
            passed += usize::from(p > CHI_SQUARE_MIN_P);
            total += 1;
        }
    }
    rows.push(CheckRow::gate("sampling-consistency", passed, total));

    let mut rng = stream(cfg.seed, 7);
    let mut passed = 0;
    let mut total = 0;
    let mut test_games = vec![generate::glove(2, 1)?];
    for _ in 0..ESTIMATOR_GAMES.min(games) {
        let n = rng.random_range(3..=6);
        test_games.push(generate::random_uniform(n, &mut rng)?);
    }
    for g in &test_games {
        let exact = exact_shapley(g)?;
        for i in 0..g.n() {
            let est = monte_carlo_shapley_estimate(g, i, CHECK_DRAWS, &mut rng)?;
            let bound = STD_ERROR_BOUND * est.std_error() + 1e-12;
            passed += usize::from((est.mean - exact[i]).abs() <= bound);
            total += 1;
        }
    }
    rows.push(CheckRow {
        name: "estimator-convergence",
        passed,
        total,
        gating: false,
    });

    Ok(SuiteReport { rows })
}

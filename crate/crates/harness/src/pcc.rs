//! Correlation between the credit a learner assigns each predator and how
//! close that predator is to the prey.

use envs::{Environment, PreyPredator};
use marl::Learner;
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::eval::{episode_rng, Policy};
use crate::{HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correlation {
    pub coefficient: f64,
    /// Two-tailed, from the t statistic with `n − 2` degrees of freedom.
    pub p_value: f64,
    pub n: usize,
}

pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<Correlation> {
    if xs.len() != ys.len() {
        return Err(HarnessError::Config(format!("{} x values but {} y values", xs.len(), ys.len())));
    }
    let n = xs.len();
    if n < 3 {
        return Err(HarnessError::TooFew("correlation", 3));
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / n as f64;
    let (mx, my) = (mean(xs), mean(ys));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (&x, &y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(HarnessError::ZeroVariance("first input is constant"));
    }
    if syy == 0.0 {
        return Err(HarnessError::ZeroVariance("second input is constant"));
    }
    let r = (sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0);
    let df = (n - 2) as f64;
    let p_value = if r.abs() == 1.0 {
        0.0
    } else {
        let t = r * (df / (1.0 - r * r)).sqrt();
        let dist = StudentsT::new(0.0, 1.0, df).expect("df > 0");
        2.0 * dist.sf(t.abs())
    };
    Ok(Correlation {
        coefficient: r,
        p_value,
        n,
    })
}

/// Paired samples behind a credit/distance correlation.
#[derive(Debug, Clone, Default)]
pub struct CreditSamples {
    pub credits: Vec<f64>,
    pub inverse_distances: Vec<f64>,
}

impl CreditSamples {
    pub fn correlation(&self) -> Result<Correlation> {
        pearson(&self.credits, &self.inverse_distances)
    }
}

/// Rolls out the greedy policy, draws `samples` visited transitions
/// uniformly without replacement and pairs each predator's credit with the
/// reciprocal of its distance to the prey. Episodes are collected until the
/// pool holds at least `4 × samples` transitions.
pub fn credit_samples(learner: &dyn Learner, samples: usize, seed: u64) -> Result<CreditSamples> {
    let mut env = PreyPredator::new();
    let limit = env.spec().episode_limit;
    let policy = Policy::Greedy(learner);
    let mut pool: Vec<(Vec<f64>, Vec<usize>, Vec<f64>)> = Vec::new();
    let mut episode = 0;
    while pool.len() < samples.max(1) * 4 {
        let mut rng = episode_rng(seed, episode);
        let mut step = env.reset(&mut rng);
        for _ in 0..limit {
            let actions = policy.actions(&step, env.spec().n_actions, &mut rng)?;
            pool.push((step.global_state.clone(), actions.clone(), env.predator_distances()));
            step = env.step(&actions, &mut rng)?;
            if step.finished() {
                break;
            }
        }
        episode += 1;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = CreditSamples::default();
    for k in index::sample(&mut rng, pool.len(), samples).into_iter() {
        let (state, actions, dists) = &pool[k];
        let credits = learner.credits(state, actions, &mut rng)?;
        for (c, d) in credits.into_iter().zip(dists) {
            out.credits.push(c);
            out.inverse_distances.push(1.0 / d.max(1e-6));
        }
    }
    Ok(out)
}

pub fn pcc_credit_distance(learner: &dyn Learner, samples: usize, seed: u64) -> Result<Correlation> {
    credit_samples(learner, samples, seed)?.correlation()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_pass(xs: &[f64], ys: &[f64]) -> f64 {
        let n = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let cov: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let vx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        let vy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
        cov / (vx * vy).sqrt()
    }

    #[test]
    fn proportional_inputs_correlate_perfectly() {
        let d = [0.5, 1.0, 2.0, 4.0, 0.25];
        let inv: Vec<f64> = d.iter().map(|x| 1.0 / x).collect();
        let credits: Vec<f64> = inv.iter().map(|x| 3.0 * x).collect();
        let c = pearson(&credits, &inv).unwrap();
        assert!((c.coefficient - 1.0).abs() < 1e-12);
        assert_eq!(c.p_value, 0.0);
    }

    #[test]
    fn constant_credit_is_undefined() {
        assert!(matches!(pearson(&[2.0; 4], &[1.0, 2.0, 3.0, 4.0]), Err(HarnessError::ZeroVariance(_))));
        assert!(matches!(pearson(&[1.0, 2.0], &[1.0, 2.0]), Err(HarnessError::TooFew(..))));
    }

    #[test]
    fn matches_textbook_fixture() {
        let xs = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0];
        let ys = [2.1, 3.9, 6.2, 7.8, 10.1, 12.2, 13.8, 16.3];
        let zs = [5.0, -1.0, 3.0, 0.5, 2.0, -4.0, 1.0, 0.0];
        for other in [&ys, &zs] {
            assert!((pearson(&xs, other).unwrap().coefficient - two_pass(&xs, other)).abs() < 1e-12);
        }
        // reference values from an independent statistics package
        let c = pearson(&xs, &zs).unwrap();
        assert!((c.coefficient + 0.480_898_451_628_777_15).abs() < 1e-12);
        assert!((c.p_value - 0.227_688_209_695_638_4).abs() < 1e-9, "{}", c.p_value);
    }
}

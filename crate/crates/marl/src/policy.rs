//! Decentralized action selection and the categorical-policy helpers shared
//! by every learner.

use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2};
use nn::{argmax, gumbel_softmax_sample, Mlp};
use rand::RngCore;
use rand_distr::{Distribution, Gumbel};

use crate::{MarlError, Result};

/// Agent `i`'s observation is the `i`-th chunk of the global state.
pub fn observation(state: &[f64], agent: usize, obs_dim: usize) -> &[f64] {
    &state[agent * obs_dim..(agent + 1) * obs_dim]
}

pub fn observation_rows(states: ArrayView2<'_, f64>, agent: usize, obs_dim: usize) -> ArrayView2<'_, f64> {
    states.slice_move(s![.., agent * obs_dim..(agent + 1) * obs_dim])
}

/// One action per agent, each read only from that agent's actor and its
/// own observation. Exploration draws a hard Gumbel-Softmax sample at
/// temperature 1; otherwise the greedy logit wins.
pub fn select_actions(actors: &[&Mlp], state: &[f64], explore: bool, rng: &mut dyn RngCore) -> Result<Vec<usize>> {
    let obs_dim = actors.first().map_or(0, |a| a.in_dim());
    if state.len() != actors.len() * obs_dim {
        return Err(MarlError::Dimension {
            what: "state",
            expected: actors.len() * obs_dim,
            got: state.len(),
        });
    }
    actors
        .iter()
        .enumerate()
        .map(|(i, actor)| {
            let logits = actor.predict_one(observation(state, i, obs_dim))?;
            Ok(if explore {
                argmax(&gumbel_softmax_sample(&logits, 1.0, rng)?)
            } else {
                argmax(&logits)
            })
        })
        .collect()
}

pub fn gumbel_noise(rng: &mut dyn RngCore, rows: usize, cols: usize) -> Array2<f64> {
    let g = Gumbel::new(0.0, 1.0).expect("unit scale");
    Array2::from_shape_simple_fn((rows, cols), || g.sample(rng))
}

/// Row-wise softmax of `logits (+ noise)` at temperature 1.
pub fn softmax_rows(logits: &Array2<f64>, noise: Option<&Array2<f64>>) -> Array2<f64> {
    let mut z = logits.as_standard_layout().into_owned();
    if let Some(n) = noise {
        z += n;
    }
    for mut row in z.rows_mut() {
        let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row.mapv_inplace(|v| v / sum);
    }
    z
}

pub fn onehot_rows(indices: impl IntoIterator<Item = usize>, n_actions: usize) -> Array2<f64> {
    let idx: Vec<usize> = indices.into_iter().collect();
    let mut out = Array2::zeros((idx.len(), n_actions));
    for (k, &a) in idx.iter().enumerate() {
        out[[k, a]] = 1.0;
    }
    out
}

/// Hard samples from each row's categorical `softmax(logits)`.
pub fn sample_rows(logits: &Array2<f64>, rng: &mut dyn RngCore) -> Vec<usize> {
    let noise = gumbel_noise(rng, logits.nrows(), logits.ncols());
    let z = logits + &noise;
    z.rows().into_iter().map(|r| argmax(&r.to_vec())).collect()
}

pub fn entropy(p: ArrayView1<f64>) -> f64 {
    -p.iter().filter(|&&x| x > 0.0).map(|&x| x * x.ln()).sum::<f64>()
}

/// `∂(−H(softmax(z)))/∂z = p ⊙ (log p − Σ p log p)`.
pub fn neg_entropy_grad(p: ArrayView1<f64>) -> Array1<f64> {
    let logs = p.mapv(|x| x.max(1e-300).ln());
    let mean = p.dot(&logs);
    &p * &(logs - mean)
}

pub fn log_softmax(z: ArrayView1<f64>) -> Array1<f64> {
    let max = z.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
    let lse = z.mapv(|v| (v - max).exp()).sum().ln() + max;
    z.mapv(|v| v - lse)
}

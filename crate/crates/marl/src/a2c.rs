//! On-policy baselines: independent advantage actor-critic and COMA's
//! counterfactual baseline over a centralized critic.

use envs::EnvSpec;
use ndarray::{s, Array1, Array2, ArrayView2};
use nn::{Grads, Mlp};
use rand::RngCore;

use crate::ddpg::restore_into;
use crate::learner::{check_finite, UpdateStats};
use crate::policy::{entropy, log_softmax, neg_entropy_grad, observation, observation_rows, sample_rows, softmax_rows};
use crate::{Algorithm, LearnerConfig, MarlError, Result, Trained, Transition};

/// `G_t = r_t + γ·G_{t+1}` inside an episode segment. A segment ends at an
/// episode end or the last transition, where `bootstrap(t)` supplies the
/// tail value unless the transition is terminal.
pub fn discounted_returns(rollout: &[Transition], gamma: f64, bootstrap: impl Fn(usize) -> f64) -> Vec<f64> {
    let len = rollout.len();
    let mut out = vec![0.0; len];
    for t in (0..len).rev() {
        let tr = &rollout[t];
        let tail = if tr.done {
            0.0
        } else if t + 1 == len || tr.episode_end {
            bootstrap(t)
        } else {
            out[t + 1]
        };
        out[t] = tr.reward + gamma * tail;
    }
    out
}

/// `Q(s, u)[chosen] − Σ_a π(a)·Q(s, u)[a]`: the chosen action's value
/// against the policy-weighted counterfactual baseline.
pub fn coma_advantage(q: &[f64], pi: &[f64], chosen: usize) -> f64 {
    q[chosen] - q.iter().zip(pi).map(|(a, b)| a * b).sum::<f64>()
}

fn needs_bootstrap(rollout: &[Transition], t: usize) -> bool {
    let tr = &rollout[t];
    !tr.done && (t + 1 == rollout.len() || tr.episode_end)
}

pub struct A2cLearner {
    cfg: LearnerConfig,
    spec: EnvSpec,
    actors: Vec<Trained>,
    /// One state-value net per agent (IA2C) or one shared Q net (COMA).
    critics: Vec<Trained>,
    rollout: Vec<Transition>,
    steps: usize,
}

impl A2cLearner {
    pub fn new(cfg: LearnerConfig, spec: EnvSpec, rng: &mut dyn RngCore) -> Self {
        assert!(cfg.algorithm.on_policy(), "on-policy algorithm expected");
        let actors = (0..spec.n_agents)
            .map(|_| Trained::new(spec.obs_dim, cfg.hidden, spec.n_actions, cfg.actor_lr, rng))
            .collect();
        let critics = match cfg.algorithm {
            Algorithm::Coma => vec![Trained::new(
                spec.state_dim() + spec.n_agents * spec.n_actions + spec.n_agents,
                cfg.hidden,
                spec.n_actions,
                cfg.critic_lr,
                rng,
            )],
            _ => (0..spec.n_agents)
                .map(|_| Trained::new(spec.obs_dim, cfg.hidden, 1, cfg.critic_lr, rng))
                .collect(),
        };
        Self {
            cfg,
            spec,
            actors,
            critics,
            rollout: Vec::new(),
            steps: 0,
        }
    }

    fn coma(&self) -> bool {
        self.cfg.algorithm == Algorithm::Coma
    }

    /// COMA critic input: state, the other agents' one-hot actions (own
    /// block zero) and the agent's index one-hot.
    fn coma_rows(&self, agent: usize, states: ArrayView2<f64>, actions: &[Vec<usize>], active: &[Vec<bool>]) -> Array2<f64> {
        let (n, a, sd) = (self.spec.n_agents, self.spec.n_actions, self.spec.state_dim());
        let mut x = Array2::zeros((states.nrows(), sd + n * a + n));
        x.slice_mut(s![.., ..sd]).assign(&states);
        for k in 0..states.nrows() {
            for j in (0..n).filter(|&j| j != agent && active[k][j]) {
                x[[k, sd + j * a + actions[k][j]]] = 1.0;
            }
            x[[k, sd + n * a + agent]] = 1.0;
        }
        x
    }

    fn stack(rows: impl Iterator<Item = Vec<f64>>, width: usize) -> Array2<f64> {
        let flat: Vec<f64> = rows.flatten().collect();
        Array2::from_shape_vec((flat.len() / width.max(1), width), flat).expect("rectangular")
    }

    /// Tail values for every agent at every transition that needs one.
    fn bootstraps(&self, rollout: &[Transition], rng: &mut dyn RngCore) -> Result<Vec<Vec<f64>>> {
        let (n, o) = (self.spec.n_agents, self.spec.obs_dim);
        let idx: Vec<usize> = (0..rollout.len()).filter(|&t| needs_bootstrap(rollout, t)).collect();
        let mut out = vec![vec![0.0; rollout.len()]; n];
        if idx.is_empty() {
            return Ok(out);
        }
        let next = Self::stack(idx.iter().map(|&t| rollout[t].next_state.clone()), self.spec.state_dim());
        if self.coma() {
            let mut picks = vec![vec![0usize; n]; idx.len()];
            for (i, actor) in self.actors.iter().enumerate() {
                let logits = actor.live.predict(observation_rows(next.view(), i, o))?;
                for (k, a) in sample_rows(&logits, rng).into_iter().enumerate() {
                    picks[k][i] = a;
                }
            }
            let active: Vec<Vec<bool>> = idx.iter().map(|&t| rollout[t].next_active.clone()).collect();
            for (i, row) in out.iter_mut().enumerate() {
                let q = self.critics[0].target.predict(self.coma_rows(i, next.view(), &picks, &active).view())?;
                for (k, &t) in idx.iter().enumerate() {
                    row[t] = q[[k, picks[k][i]]];
                }
            }
        } else {
            for (i, row) in out.iter_mut().enumerate() {
                let v = self.critics[i].live.predict(observation_rows(next.view(), i, o))?;
                for (k, &t) in idx.iter().enumerate() {
                    row[t] = v[[k, 0]];
                }
            }
        }
        Ok(out)
    }

    /// Policy-gradient step with advantages `adv`; returns the loss.
    fn actor_step(&mut self, agent: usize, states: ArrayView2<f64>, actions: &[usize], adv: &[f64], weights: &[f64]) -> Result<f64> {
        let len = adv.len() as f64;
        let beta = self.cfg.entropy_coef;
        let actor = &self.actors[agent].live;
        let (logits, cache) = actor.forward_batch(observation_rows(states, agent, self.spec.obs_dim))?;
        let pi = softmax_rows(&logits, None);
        let mut loss = 0.0;
        let mut dlogits = Array2::zeros(logits.dim());
        for k in 0..adv.len() {
            let w = weights[k];
            let logp = log_softmax(logits.row(k))[actions[k]];
            loss -= w * (adv[k] * logp + beta * entropy(pi.row(k))) / len;
            let ent = neg_entropy_grad(pi.row(k));
            for j in 0..logits.ncols() {
                let ind = if j == actions[k] { 1.0 } else { 0.0 };
                dlogits[[k, j]] = (-w * adv[k] * (ind - pi[[k, j]]) + beta * w * ent[j]) / len;
            }
        }
        let (grads, _) = actor.backward_batch(&cache, dlogits.view())?;
        check_finite(loss, "actor loss")?;
        self.actors[agent].apply(grads, self.cfg.grad_clip)?;
        Ok(loss)
    }

    pub fn update(&mut self, rollout: &[Transition], rng: &mut dyn RngCore) -> Result<UpdateStats> {
        if rollout.is_empty() {
            return Err(MarlError::EmptyBatch);
        }
        let (n, o) = (self.spec.n_agents, self.spec.obs_dim);
        let len = rollout.len();
        let boots = self.bootstraps(rollout, rng)?;
        let states = Self::stack(rollout.iter().map(|t| t.state.clone()), self.spec.state_dim());
        let actions: Vec<Vec<usize>> = rollout.iter().map(|t| t.actions.clone()).collect();
        let active: Vec<Vec<bool>> = rollout.iter().map(|t| t.active.clone()).collect();
        let mut critic_loss = 0.0;
        let mut actor_loss = 0.0;
        let mut coma_grads: Option<Grads> = None;
        let mut advantages = Vec::with_capacity(n);
        for i in 0..n {
            let returns = discounted_returns(rollout, self.cfg.gamma, |t| boots[i][t]);
            let weights: Vec<f64> = active.iter().map(|a| if a[i] { 1.0 } else { 0.0 }).collect();
            let own: Vec<usize> = actions.iter().map(|a| a[i]).collect();
            let adv: Vec<f64> = if self.coma() {
                let critic = &self.critics[0].live;
                let x = self.coma_rows(i, states.view(), &actions, &active);
                let (q, cache) = critic.forward_batch(x.view())?;
                let logits = self.actors[i].live.predict(observation_rows(states.view(), i, o))?;
                let pi = softmax_rows(&logits, None);
                let mut up = Array2::zeros(q.dim());
                let mut adv = vec![0.0; len];
                for k in 0..len {
                    let chosen = q[[k, own[k]]];
                    let resid = returns[k] - chosen;
                    critic_loss += 0.5 * weights[k] * resid * resid / (len * n) as f64;
                    up[[k, own[k]]] = -weights[k] * resid / (len * n) as f64;
                    adv[k] = coma_advantage(&q.row(k).to_vec(), &pi.row(k).to_vec(), own[k]);
                }
                let (g, _) = critic.backward_batch(&cache, up.view())?;
                match coma_grads.as_mut() {
                    Some(acc) => acc.add(&g),
                    None => coma_grads = Some(g),
                }
                adv
            } else {
                let (v, cache) = self.critics[i].live.forward_batch(observation_rows(states.view(), i, o))?;
                let resid: Array1<f64> = Array1::from_iter((0..len).map(|k| returns[k] - v[[k, 0]]));
                let up = Array2::from_shape_fn((len, 1), |(k, _)| -weights[k] * resid[k] / len as f64);
                critic_loss += (0..len).map(|k| 0.5 * weights[k] * resid[k] * resid[k]).sum::<f64>() / (len * n) as f64;
                let (g, _) = self.critics[i].live.backward_batch(&cache, up.view())?;
                check_finite(critic_loss, "critic loss")?;
                self.critics[i].apply(g, self.cfg.grad_clip)?;
                resid.to_vec()
            };
            advantages.push((own, adv, weights));
        }
        if let Some(g) = coma_grads {
            check_finite(critic_loss, "critic loss")?;
            self.critics[0].apply(g, self.cfg.grad_clip)?;
        }
        for (i, (own, adv, weights)) in advantages.into_iter().enumerate() {
            actor_loss += self.actor_step(i, states.view(), &own, &adv, &weights)? / n as f64;
        }
        Ok(UpdateStats { critic_loss, actor_loss })
    }

    pub(crate) fn push_and_maybe_update(&mut self, t: Transition, rng: &mut dyn RngCore) -> Result<Option<UpdateStats>> {
        self.rollout.push(t);
        self.steps += 1;
        let mut stats = None;
        if self.steps % self.cfg.behaviour_update_freq == 0 {
            let rollout = std::mem::take(&mut self.rollout);
            stats = Some(self.update(&rollout, rng)?);
        }
        if self.coma() && self.steps % self.cfg.target_update_freq == 0 {
            self.critics[0].track(self.cfg.tau)?;
        }
        Ok(stats)
    }

    pub(crate) fn credits_for(&self, state: &[f64], actions: &[usize]) -> Result<Vec<f64>> {
        let (n, o) = (self.spec.n_agents, self.spec.obs_dim);
        let states = Array2::from_shape_vec((1, state.len()), state.to_vec()).map_err(|_| MarlError::Dimension {
            what: "state",
            expected: self.spec.state_dim(),
            got: state.len(),
        })?;
        (0..n)
            .map(|i| {
                if self.coma() {
                    let x = self.coma_rows(i, states.view(), &[actions.to_vec()], &[vec![true; n]]);
                    Ok(self.critics[0].live.predict(x.view())?[[0, actions[i]]])
                } else {
                    Ok(self.critics[i].live.predict_one(observation(state, i, o))?[0])
                }
            })
            .collect()
    }

    pub fn config(&self) -> &LearnerConfig {
        &self.cfg
    }

    pub(crate) fn actor_mlps(&self) -> Vec<&Mlp> {
        self.actors.iter().map(|t| &t.live).collect()
    }

    pub(crate) fn critic_mlps(&self) -> Vec<&Mlp> {
        self.critics.iter().map(|t| &t.live).collect()
    }

    pub(crate) fn restore(&mut self, actors: Vec<Mlp>, critics: Vec<Mlp>) -> Result<()> {
        restore_into(&mut self.actors, actors, self.cfg.actor_lr)?;
        restore_into(&mut self.critics, critics, self.cfg.critic_lr)
    }

    pub(crate) fn spec(&self) -> EnvSpec {
        self.spec
    }
}

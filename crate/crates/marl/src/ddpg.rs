//! Deterministic-policy learners over discrete actions: SQDDPG with AMC
//! critics, independent DDPG and cooperative MADDPG.

use coopgame::{sample_ordered_coalition, OrderedCoalition};
use envs::EnvSpec;
use ndarray::{s, Array1, Array2, ArrayView2};
use nn::{softmax_backward, Grads, Mlp};
use rand::RngCore;

use crate::amc::{exact_shapley_q, write_action_block, MAX_EXACT_AGENTS};
use crate::learner::{check_finite, UpdateStats};
use crate::policy::{gumbel_noise, neg_entropy_grad, observation, observation_rows, onehot_rows, sample_rows, softmax_rows, entropy};
use crate::{approx_shapley_q, Algorithm, Batch, LearnerConfig, MarlError, ReplayBuffer, Result, Trained, Transition};

/// Join orders sampled per agent when credits cannot be enumerated exactly.
const CREDIT_SAMPLES: usize = 64;

/// What an agent's critic looks at.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CriticKind {
    /// Global state plus the join-ordered, masked action block.
    Amc,
    /// Own observation plus own action.
    Local,
    /// Global state plus every agent's action by index.
    Central,
}

impl CriticKind {
    pub fn for_algorithm(a: Algorithm) -> Option<Self> {
        match a {
            Algorithm::Sqddpg => Some(CriticKind::Amc),
            Algorithm::Iddpg => Some(CriticKind::Local),
            Algorithm::Maddpg => Some(CriticKind::Central),
            Algorithm::Ia2c | Algorithm::Coma => None,
        }
    }

    pub fn input_dim(self, spec: &EnvSpec) -> usize {
        match self {
            CriticKind::Amc | CriticKind::Central => spec.state_dim() + spec.n_agents * spec.n_actions,
            CriticKind::Local => spec.obs_dim + spec.n_actions,
        }
    }
}

/// Critic inputs for one agent over a batch: `per` rows per batch element
/// and, for each row, the column where the agent's own action starts.
#[derive(Debug, Clone)]
pub struct CriticRows {
    pub x: Array2<f64>,
    pub slot: Vec<usize>,
    pub per: usize,
}

impl CriticRows {
    pub fn batch_len(&self) -> usize {
        self.x.nrows() / self.per
    }

    fn means(&self, q: &Array2<f64>) -> Array1<f64> {
        let col = q.column(0);
        Array1::from_shape_fn(self.batch_len(), |k| {
            col.slice(s![k * self.per..(k + 1) * self.per]).mean().expect("per ≥ 1")
        })
    }
}

/// Builds `agent`'s critic inputs. `joint` is `G × (n·A)` with agent `j`'s
/// action in columns `j·A..(j+1)·A`. For [`CriticKind::Amc`], `orders` holds
/// `G·M` join orders for `agent`, `M` consecutive ones per batch element.
pub fn critic_rows(
    kind: CriticKind,
    agent: usize,
    obs_dim: usize,
    n_actions: usize,
    states: ArrayView2<f64>,
    joint: ArrayView2<f64>,
    orders: &[OrderedCoalition],
) -> Result<CriticRows> {
    let (g, sd) = states.dim();
    let a = n_actions;
    if joint.nrows() != g {
        return Err(MarlError::Dimension {
            what: "joint action rows",
            expected: g,
            got: joint.nrows(),
        });
    }
    let n = joint.ncols() / a;
    match kind {
        CriticKind::Local => {
            let mut x = Array2::zeros((g, obs_dim + a));
            x.slice_mut(s![.., ..obs_dim]).assign(&observation_rows(states, agent, obs_dim));
            x.slice_mut(s![.., obs_dim..]).assign(&joint.slice(s![.., agent * a..(agent + 1) * a]));
            Ok(CriticRows {
                x,
                slot: vec![obs_dim; g],
                per: 1,
            })
        }
        CriticKind::Central => {
            let mut x = Array2::zeros((g, sd + n * a));
            x.slice_mut(s![.., ..sd]).assign(&states);
            x.slice_mut(s![.., sd..]).assign(&joint);
            Ok(CriticRows {
                x,
                slot: vec![sd + agent * a; g],
                per: 1,
            })
        }
        CriticKind::Amc => {
            if orders.is_empty() || orders.len() % g != 0 {
                return Err(MarlError::Dimension {
                    what: "join orders",
                    expected: g,
                    got: orders.len(),
                });
            }
            let per = orders.len() / g;
            let mut x = Array2::zeros((g * per, sd + n * a));
            let mut slot = Vec::with_capacity(g * per);
            for (r, (mut row, o)) in x.rows_mut().into_iter().zip(orders).enumerate() {
                if o.joiner() != agent {
                    return Err(MarlError::Dimension {
                        what: "join order joiner",
                        expected: agent,
                        got: o.joiner(),
                    });
                }
                let k = r / per;
                let dst = row.as_slice_mut().expect("row-major");
                dst[..sd].copy_from_slice(&states.row(k).to_vec());
                write_action_block(&mut dst[sd..], o, &joint.row(k).to_vec(), a);
                slot.push(sd + o.len() * a);
            }
            Ok(CriticRows { x, slot, per })
        }
    }
}

pub(crate) fn sample_orders(agent: usize, n: usize, g: usize, m: usize, rng: &mut dyn RngCore) -> Result<Vec<OrderedCoalition>> {
    (0..g * m)
        .map(|_| sample_ordered_coalition(rng, agent, n).map_err(Into::into))
        .collect()
}

/// The coupled loss `½·mean_k (y_k − Σᵢ Q^Φᵢ_k)²` with its gradient for
/// every agent's critic.
pub fn sqddpg_critic_loss(critics: &[&Mlp], rows: &[CriticRows], y: &[f64]) -> Result<(f64, Vec<Grads>)> {
    let g = y.len();
    if g == 0 {
        return Err(MarlError::EmptyBatch);
    }
    let mut total = Array1::<f64>::zeros(g);
    let mut caches = Vec::with_capacity(critics.len());
    for (c, r) in critics.iter().zip(rows) {
        let (q, cache) = c.forward_batch(r.x.view())?;
        total += &r.means(&q);
        caches.push(cache);
    }
    let resid = Array1::from_iter(y.iter().zip(&total).map(|(y, q)| y - q));
    let loss = 0.5 * resid.mapv(|v| v * v).mean().expect("non-empty");
    let grads = critics
        .iter()
        .zip(rows)
        .zip(&caches)
        .map(|((c, r), cache)| {
            let up = Array2::from_shape_fn((r.x.nrows(), 1), |(row, _)| -resid[row / r.per] / (g * r.per) as f64);
            c.backward_batch(cache, up.view()).map(|(gr, _)| gr)
        })
        .collect::<std::result::Result<Vec<_>, _>>()?;
    Ok((loss, grads))
}

/// `½·mean_k (y_k − Q_k)²` for one independent critic.
pub(crate) fn td_loss(critic: &Mlp, rows: &CriticRows, y: &[f64]) -> Result<(f64, Grads)> {
    let (loss, mut grads) = sqddpg_critic_loss(&[critic], std::slice::from_ref(rows), y)?;
    Ok((loss, grads.pop().expect("one critic")))
}

/// Inputs of one agent's policy-gradient step.
pub struct ActorTerms<'a> {
    pub kind: CriticKind,
    pub agent: usize,
    pub states: ArrayView2<'a, f64>,
    /// Joint actions; the agent's own block is replaced by its policy output.
    pub joint: ArrayView2<'a, f64>,
    pub orders: &'a [OrderedCoalition],
    /// Gumbel noise, one row per batch element.
    pub noise: ArrayView2<'a, f64>,
    /// Per-element weight, 0 for inactive slots.
    pub weights: &'a [f64],
    pub entropy_coef: f64,
    /// Feed the critic the hard one-hot argmax (true) or the relaxed sample.
    /// The gradient always flows through the relaxed sample.
    pub straight_through: bool,
}

/// Loss `−mean_k wₖ·Qᵢ(sₖ, aᵢ = π(sₖ)) − β·mean_k wₖ·H(softmax(zₖ))` and its
/// gradient for the actor. The action derivative is read from the agent's
/// own slot only.
pub fn actor_objective(actor: &Mlp, critic: &Mlp, t: &ActorTerms<'_>) -> Result<(f64, Grads)> {
    let (g, a) = (t.states.nrows(), actor.out_dim());
    if g == 0 {
        return Err(MarlError::EmptyBatch);
    }
    let obs_dim = actor.in_dim();
    let (logits, acache) = actor.forward_batch(observation_rows(t.states, t.agent, obs_dim))?;
    let relaxed = softmax_rows(&logits, Some(&t.noise.to_owned()));
    let pi = softmax_rows(&logits, None);
    let own = if t.straight_through {
        onehot_rows(relaxed.rows().into_iter().map(|r| nn::argmax(&r.to_vec())), a)
    } else {
        relaxed.clone()
    };
    let mut joint = t.joint.to_owned();
    joint.slice_mut(s![.., t.agent * a..(t.agent + 1) * a]).assign(&own);
    let rows = critic_rows(t.kind, t.agent, obs_dim, a, t.states, joint.view(), t.orders)?;
    let (q, ccache) = critic.forward_batch(rows.x.view())?;
    let qk = rows.means(&q);
    let gf = g as f64;
    let mut loss = 0.0;
    for k in 0..g {
        loss -= t.weights[k] * (qk[k] + t.entropy_coef * entropy(pi.row(k))) / gf;
    }
    let up = Array2::from_shape_fn((rows.x.nrows(), 1), |(r, _)| -t.weights[r / rows.per] / (gf * rows.per as f64));
    let dx = critic.input_grad(&ccache, up.view())?;
    let mut dlogits = Array2::zeros((g, a));
    for k in 0..g {
        let mut ga = vec![0.0; a];
        for r in k * rows.per..(k + 1) * rows.per {
            let at = rows.slot[r];
            for (j, v) in ga.iter_mut().enumerate() {
                *v += dx[[r, at + j]];
            }
        }
        let d = softmax_backward(&relaxed.row(k).to_vec(), &ga, 1.0)?;
        let ent = neg_entropy_grad(pi.row(k));
        let scale = t.entropy_coef * t.weights[k] / gf;
        for j in 0..a {
            dlogits[[k, j]] = d[j] + scale * ent[j];
        }
    }
    let (grads, _) = actor.backward_batch(&acache, dlogits.view())?;
    Ok((loss, grads))
}

/// SQDDPG, IDDPG or MADDPG with replay and soft-updated targets.
pub struct DdpgLearner {
    cfg: LearnerConfig,
    spec: EnvSpec,
    kind: CriticKind,
    actors: Vec<Trained>,
    critics: Vec<Trained>,
    buffer: ReplayBuffer,
    steps: usize,
}

impl DdpgLearner {
    pub fn new(cfg: LearnerConfig, spec: EnvSpec, rng: &mut dyn RngCore) -> Self {
        let kind = CriticKind::for_algorithm(cfg.algorithm).expect("deterministic-policy algorithm");
        let actors = (0..spec.n_agents)
            .map(|_| Trained::new(spec.obs_dim, cfg.hidden, spec.n_actions, cfg.actor_lr, rng))
            .collect();
        let critics = (0..spec.n_agents)
            .map(|_| Trained::new(kind.input_dim(&spec), cfg.hidden, 1, cfg.critic_lr, rng))
            .collect();
        let buffer = ReplayBuffer::new(cfg.replay_capacity);
        Self {
            cfg,
            spec,
            kind,
            actors,
            critics,
            buffer,
            steps: 0,
        }
    }

    pub fn kind(&self) -> CriticKind {
        self.kind
    }

    pub fn config(&self) -> &LearnerConfig {
        &self.cfg
    }

    pub fn buffer(&self) -> &ReplayBuffer {
        &self.buffer
    }

    pub fn actor_nets(&self) -> &[Trained] {
        &self.actors
    }

    pub fn critic_nets(&self) -> &[Trained] {
        &self.critics
    }

    pub fn critic_nets_mut(&mut self) -> &mut [Trained] {
        &mut self.critics
    }

    fn orders(&self, agent: usize, g: usize, rng: &mut dyn RngCore) -> Result<Vec<OrderedCoalition>> {
        match self.kind {
            CriticKind::Amc => sample_orders(agent, self.spec.n_agents, g, self.cfg.sample_size, rng),
            _ => Ok(Vec::new()),
        }
    }

    /// One-hot joint actions with inactive slots zeroed.
    fn joint_from_indices(&self, actions: &Array2<usize>, active: &Array2<f64>) -> Array2<f64> {
        let (g, n, a) = (actions.nrows(), self.spec.n_agents, self.spec.n_actions);
        let mut joint = Array2::zeros((g, n * a));
        for k in 0..g {
            for i in 0..n {
                joint[[k, i * a + actions[[k, i]]]] = active[[k, i]];
            }
        }
        joint
    }

    /// Hard samples from each agent's (target or live) policy.
    fn policy_joint(&self, states: ArrayView2<f64>, active: &Array2<f64>, target: bool, rng: &mut dyn RngCore) -> Result<Array2<f64>> {
        let mut picks = Array2::zeros((states.nrows(), self.spec.n_agents));
        for (i, actor) in self.actors.iter().enumerate() {
            let net = if target { &actor.target } else { &actor.live };
            let logits = net.predict(observation_rows(states, i, self.spec.obs_dim))?;
            for (k, a) in sample_rows(&logits, rng).into_iter().enumerate() {
                picks[[k, i]] = a;
            }
        }
        Ok(self.joint_from_indices(&picks, active))
    }

    /// Critic step on `batch`; returns the pre-step loss.
    pub fn critic_update(&mut self, batch: &Batch, rng: &mut dyn RngCore) -> Result<f64> {
        let g = batch.len();
        if g == 0 {
            return Err(MarlError::EmptyBatch);
        }
        let n = self.spec.n_agents;
        let (o, a) = (self.spec.obs_dim, self.spec.n_actions);
        let next_joint = self.policy_joint(batch.next_states.view(), &batch.next_active, true, rng)?;
        let joint = self.joint_from_indices(&batch.actions, &batch.active);
        let bootstrap = |k: usize| if batch.dones[k] { 0.0 } else { self.cfg.gamma };
        let mut next_q = Vec::with_capacity(n);
        for i in 0..n {
            let orders = self.orders(i, g, rng)?;
            let rows = critic_rows(self.kind, i, o, a, batch.next_states.view(), next_joint.view(), &orders)?;
            next_q.push(rows.means(&self.critics[i].target.predict(rows.x.view())?));
        }
        let mut rows = Vec::with_capacity(n);
        for i in 0..n {
            let orders = self.orders(i, g, rng)?;
            rows.push(critic_rows(self.kind, i, o, a, batch.states.view(), joint.view(), &orders)?);
        }
        let clip = self.cfg.grad_clip;
        if self.kind == CriticKind::Amc {
            let y: Vec<f64> = (0..g)
                .map(|k| batch.rewards[k] + bootstrap(k) * next_q.iter().map(|q| q[k]).sum::<f64>())
                .collect();
            let lives: Vec<&Mlp> = self.critics.iter().map(|c| &c.live).collect();
            let (loss, grads) = sqddpg_critic_loss(&lives, &rows, &y)?;
            check_finite(loss, "critic loss")?;
            for (c, gr) in self.critics.iter_mut().zip(grads) {
                c.apply(gr, clip)?;
            }
            Ok(loss)
        } else {
            let mut total = 0.0;
            for i in 0..n {
                let y: Vec<f64> = (0..g).map(|k| batch.rewards[k] + bootstrap(k) * next_q[i][k]).collect();
                let (loss, grads) = td_loss(&self.critics[i].live, &rows[i], &y)?;
                check_finite(loss, "critic loss")?;
                self.critics[i].apply(grads, clip)?;
                total += loss;
            }
            Ok(total / n as f64)
        }
    }

    /// Policy step for every agent; returns the mean pre-step actor loss.
    pub fn actor_update(&mut self, batch: &Batch, rng: &mut dyn RngCore) -> Result<f64> {
        let g = batch.len();
        if g == 0 {
            return Err(MarlError::EmptyBatch);
        }
        let (n, a) = (self.spec.n_agents, self.spec.n_actions);
        // SQDDPG re-acts with the current policies; MADDPG keeps the stored
        // actions of the other agents.
        let joint = match self.kind {
            CriticKind::Amc => self.policy_joint(batch.states.view(), &batch.active, false, rng)?,
            _ => self.joint_from_indices(&batch.actions, &batch.active),
        };
        let mut total = 0.0;
        for i in 0..n {
            let orders = self.orders(i, g, rng)?;
            let noise = gumbel_noise(rng, g, a);
            let weights: Vec<f64> = batch.active.column(i).to_vec();
            let terms = ActorTerms {
                kind: self.kind,
                agent: i,
                states: batch.states.view(),
                joint: joint.view(),
                orders: &orders,
                noise: noise.view(),
                weights: &weights,
                entropy_coef: self.cfg.entropy_coef,
                straight_through: true,
            };
            let (loss, grads) = actor_objective(&self.actors[i].live, &self.critics[i].live, &terms)?;
            check_finite(loss, "actor loss")?;
            self.actors[i].apply(grads, self.cfg.grad_clip)?;
            total += loss;
        }
        Ok(total / n as f64)
    }

    pub fn update(&mut self, batch: &Batch, rng: &mut dyn RngCore) -> Result<UpdateStats> {
        let critic_loss = self.critic_update(batch, rng)?;
        let actor_loss = self.actor_update(batch, rng)?;
        Ok(UpdateStats { critic_loss, actor_loss })
    }

    pub fn track_targets(&mut self) -> Result<()> {
        for net in self.actors.iter_mut().chain(self.critics.iter_mut()) {
            net.track(self.cfg.tau)?;
        }
        Ok(())
    }

    pub(crate) fn push_and_maybe_update(&mut self, t: Transition, rng: &mut dyn RngCore) -> Result<Option<UpdateStats>> {
        self.buffer.push(t);
        self.steps += 1;
        let mut stats = None;
        if self.steps % self.cfg.behaviour_update_freq == 0 && self.buffer.len() >= self.cfg.batch_size {
            let batch = self.buffer.sample(self.cfg.batch_size, rng)?;
            stats = Some(self.update(&batch, rng)?);
        }
        if self.steps % self.cfg.target_update_freq == 0 {
            self.track_targets()?;
        }
        Ok(stats)
    }

    pub(crate) fn credits_for(&self, state: &[f64], actions: &[usize], rng: &mut dyn RngCore) -> Result<Vec<f64>> {
        let (n, a, o) = (self.spec.n_agents, self.spec.n_actions, self.spec.obs_dim);
        let onehots: Vec<Vec<f64>> = actions
            .iter()
            .map(|&x| {
                let mut v = vec![0.0; a];
                v[x] = 1.0;
                v
            })
            .collect();
        (0..n)
            .map(|i| {
                let critic = &self.critics[i].live;
                match self.kind {
                    CriticKind::Amc if n <= MAX_EXACT_AGENTS => exact_shapley_q(critic, i, state, &onehots),
                    CriticKind::Amc => approx_shapley_q(critic, i, state, &onehots, CREDIT_SAMPLES, rng),
                    CriticKind::Local => {
                        let mut x = observation(state, i, o).to_vec();
                        x.extend_from_slice(&onehots[i]);
                        Ok(critic.predict_one(&x)?[0])
                    }
                    CriticKind::Central => {
                        let mut x = state.to_vec();
                        x.extend(onehots.iter().flatten());
                        Ok(critic.predict_one(&x)?[0])
                    }
                }
            })
            .collect()
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

pub(crate) fn restore_into(slots: &mut [Trained], nets: Vec<Mlp>, lr: f64) -> Result<()> {
    if slots.len() != nets.len() {
        return Err(MarlError::Bundle(format!("expected {} networks, got {}", slots.len(), nets.len())));
    }
    for (slot, net) in slots.iter_mut().zip(nets) {
        if !slot.live.same_shape(&net) || slot.live.in_dim() != net.in_dim() {
            return Err(MarlError::Bundle(format!(
                "network shape {}-{}-{} does not match {}-{}-{}",
                net.in_dim(),
                net.hidden_dim(),
                net.out_dim(),
                slot.live.in_dim(),
                slot.live.hidden_dim(),
                slot.live.out_dim()
            )));
        }
        *slot = Trained::from_mlp(net, lr);
    }
    Ok(())
}

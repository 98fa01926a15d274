use coopgame::{exact_shapley, generate, OrderedCoalition};
use envs::EnvSpec;
use marl::amc::MAX_EXACT_AGENTS;
use marl::policy::{gumbel_noise, onehot_rows, select_actions};
use marl::{
    actor_objective, amc_input, approx_shapley_q, approx_shapley_q_with, coma_advantage, critic_rows,
    discounted_returns, exact_shapley_q, sqddpg_critic_loss, ActorTerms, Algorithm, Batch, CriticKind, DdpgLearner,
    LearnerConfig, Transition,
};
use ndarray::{arr1, Array1, Array2};
use nn::Mlp;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-4)
}

fn orders_for(agent: usize, n: usize, count: usize, rng: &mut ChaCha8Rng) -> Vec<OrderedCoalition> {
    (0..count)
        .map(|_| coopgame::sample_ordered_coalition(rng, agent, n).unwrap())
        .collect()
}

fn constant_net(in_dim: usize, c: f64) -> Mlp {
    Mlp::from_parts(Array2::zeros((2, in_dim)), Array1::zeros(2), Array2::zeros((1, 2)), arr1(&[c])).unwrap()
}

fn perturbed(m: &Mlp, idx: usize, delta: f64) -> Mlp {
    let (mut w1, mut b1, mut w2, mut b2) = (m.w1().clone(), m.b1().clone(), m.w2().clone(), m.b2().clone());
    let sizes = [w1.len(), b1.len(), w2.len()];
    if idx < sizes[0] {
        w1.as_slice_mut().unwrap()[idx] += delta;
    } else if idx < sizes[0] + sizes[1] {
        b1[idx - sizes[0]] += delta;
    } else if idx < sizes[0] + sizes[1] + sizes[2] {
        w2.as_slice_mut().unwrap()[idx - sizes[0] - sizes[1]] += delta;
    } else {
        b2[idx - sizes[0] - sizes[1] - sizes[2]] += delta;
    }
    Mlp::from_parts(w1, b1, w2, b2).unwrap()
}

fn flat(g: &nn::Grads) -> Vec<f64> {
    [g.w1.as_slice().unwrap(), g.b1.as_slice().unwrap(), g.w2.as_slice().unwrap(), g.b2.as_slice().unwrap()].concat()
}

#[test]
fn masked_slots_ignore_outside_agents() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let state = vec![0.5, -0.5];
    let order = OrderedCoalition::new(4, 2, vec![3]).unwrap();
    for _ in 0..20 {
        let mut acts: Vec<Vec<f64>> = (0..4).map(|_| (0..3).map(|_| rng.random::<f64>()).collect()).collect();
        let base = amc_input(&state, &order, &acts).unwrap();
        acts[0] = vec![9.0, 9.0, 9.0];
        acts[1] = vec![-1.0, 2.0, 0.0];
        assert_eq!(amc_input(&state, &order, &acts).unwrap(), base);
        assert!(base[2 + 6..].iter().all(|&v| v == 0.0));
    }
}

#[test]
fn single_sample_is_one_evaluation() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let critic = Mlp::new(2 + 3 * 2, 8, 1, &mut rng);
    let acts = vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0]];
    let state = [0.1, 0.2];
    let mut a = ChaCha8Rng::seed_from_u64(9);
    let mut b = ChaCha8Rng::seed_from_u64(9);
    let q = approx_shapley_q(&critic, 1, &state, &acts, 1, &mut a).unwrap();
    let order = coopgame::sample_ordered_coalition(&mut b, 1, 3).unwrap();
    let direct = critic.predict_one(&amc_input(&state, &order, &acts).unwrap()).unwrap()[0];
    assert_eq!(q, direct);
    let c = constant_net(8, 0.75);
    for m in [1, 7, 100] {
        assert_eq!(approx_shapley_q(&c, 0, &state, &acts, m, &mut a).unwrap(), 0.75);
    }
    assert!(approx_shapley_q(&c, 0, &state, &acts, 0, &mut a).is_err());
}

#[test]
fn oracle_lookup_recovers_exact_shapley() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..5 {
        let game = generate::random_uniform(3, &mut rng).unwrap();
        let exact = exact_shapley(&game).unwrap();
        for i in 0..3 {
            let est = approx_shapley_q_with(i, 3, 10_000, &mut rng, |o| {
                let c = o.coalition();
                game.value(c.with(o.joiner())) - game.value(c)
            })
            .unwrap();
            assert!((est.mean - exact[i]).abs() < 0.02, "{} vs {}", est.mean, exact[i]);
        }
    }
}

#[test]
fn exact_shapley_q_weights_every_prefix() {
    // an AMC reading only the slot count reproduces the prefix-size law
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let critic = Mlp::new(3 * 2, 6, 1, &mut rng);
    let acts = vec![vec![1.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]];
    let exact = exact_shapley_q(&critic, 2, &[], &acts).unwrap();
    let sampled = approx_shapley_q(&critic, 2, &[], &acts, 200_000, &mut rng).unwrap();
    assert!((exact - sampled).abs() < 5e-3);
    assert!(MAX_EXACT_AGENTS >= 3);
}

#[test]
fn critic_residual_arithmetic() {
    // live critics sum to 2.8 and y = 1 + 0.9·2
    let critics: Vec<Mlp> = [1.0, 0.8, 1.0].iter().map(|&c| constant_net(4, c)).collect();
    let refs: Vec<&Mlp> = critics.iter().collect();
    let states = Array2::zeros((1, 1));
    let joint = Array2::zeros((1, 3));
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let rows: Vec<_> = (0..3)
        .map(|i| critic_rows(CriticKind::Amc, i, 1, 1, states.view(), joint.view(), &orders_for(i, 3, 1, &mut rng)).unwrap())
        .collect();
    let (loss, grads) = sqddpg_critic_loss(&refs, &rows, &[1.0 + 0.9 * 2.0]).unwrap();
    assert!(loss.abs() < 1e-24);
    assert!(grads.iter().all(|g| g.max_abs() < 1e-12));
}

struct Problem {
    n: usize,
    obs: usize,
    acts: usize,
    g: usize,
    m: usize,
    states: Array2<f64>,
    joint: Array2<f64>,
}

fn problem(rng: &mut ChaCha8Rng) -> Problem {
    let (n, obs, acts, g, m) = (rng.random_range(1..4), rng.random_range(1..4), rng.random_range(2..4), rng.random_range(1..5), rng.random_range(1..4));
    let states = Array2::from_shape_fn((g, n * obs), |_| rng.random_range(-1.0..1.0));
    let joint = onehot_rows((0..g * n).map(|_| rng.random_range(0..acts)), acts)
        .into_shape_with_order((g, n * acts))
        .unwrap();
    Problem { n, obs, acts, g, m, states, joint }
}

#[test]
fn coupled_critic_gradient_matches_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let p = problem(&mut rng);
        let critics: Vec<Mlp> = (0..p.n).map(|_| Mlp::new(p.n * p.obs + p.n * p.acts, 5, 1, &mut rng)).collect();
        let rows: Vec<_> = (0..p.n)
            .map(|i| {
                let o = orders_for(i, p.n, p.g * p.m, &mut rng);
                critic_rows(CriticKind::Amc, i, p.obs, p.acts, p.states.view(), p.joint.view(), &o).unwrap()
            })
            .collect();
        let y: Vec<f64> = (0..p.g).map(|_| rng.random_range(-2.0..2.0)).collect();
        let refs: Vec<&Mlp> = critics.iter().collect();
        let (_, grads) = sqddpg_critic_loss(&refs, &rows, &y).unwrap();
        let target = rng.random_range(0..p.n);
        let analytic = flat(&grads[target]);
        for (idx, &a) in analytic.iter().enumerate() {
            let loss_at = |d: f64| {
                let mut cs = critics.clone();
                cs[target] = perturbed(&critics[target], idx, d);
                let r: Vec<&Mlp> = cs.iter().collect();
                sqddpg_critic_loss(&r, &rows, &y).unwrap().0
            };
            let fd = (loss_at(h) - loss_at(-h)) / (2.0 * h);
            worst = worst.max(rel_err(a, fd));
        }
    }
    assert!(worst < 1e-3, "max relative error {worst}");
}

#[test]
fn actor_gradient_matches_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for case in 0..50 {
        let p = problem(&mut rng);
        let kind = [CriticKind::Amc, CriticKind::Local, CriticKind::Central][case % 3];
        let agent = rng.random_range(0..p.n);
        let spec = EnvSpec { n_agents: p.n, obs_dim: p.obs, n_actions: p.acts, episode_limit: 1 };
        let actor = Mlp::new(p.obs, 6, p.acts, &mut rng);
        let critic = Mlp::new(kind.input_dim(&spec), 6, 1, &mut rng);
        let orders = if kind == CriticKind::Amc { orders_for(agent, p.n, p.g * p.m, &mut rng) } else { Vec::new() };
        let noise = gumbel_noise(&mut rng, p.g, p.acts);
        let weights: Vec<f64> = (0..p.g).map(|_| if rng.random::<f64>() < 0.8 { 1.0 } else { 0.0 }).collect();
        let terms = ActorTerms {
            kind,
            agent,
            states: p.states.view(),
            joint: p.joint.view(),
            orders: &orders,
            noise: noise.view(),
            weights: &weights,
            entropy_coef: 0.05,
            straight_through: false,
        };
        let (_, grads) = actor_objective(&actor, &critic, &terms).unwrap();
        for (idx, &a) in flat(&grads).iter().enumerate() {
            let fd = (actor_objective(&perturbed(&actor, idx, h), &critic, &terms).unwrap().0
                - actor_objective(&perturbed(&actor, idx, -h), &critic, &terms).unwrap().0)
                / (2.0 * h);
            worst = worst.max(rel_err(a, fd));
        }
    }
    assert!(worst < 1e-3, "max relative error {worst}");
}

#[test]
fn constant_critic_leaves_actor_still() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let actor = Mlp::new(2, 4, 3, &mut rng);
    let critic = constant_net(2 * 2 + 2 * 3, 1.5);
    let states = Array2::from_shape_fn((4, 4), |_| rng.random::<f64>());
    let joint = Array2::zeros((4, 6));
    let orders = orders_for(0, 2, 4, &mut rng);
    let noise = gumbel_noise(&mut rng, 4, 3);
    let terms = ActorTerms {
        kind: CriticKind::Amc,
        agent: 0,
        states: states.view(),
        joint: joint.view(),
        orders: &orders,
        noise: noise.view(),
        weights: &[1.0; 4],
        entropy_coef: 0.0,
        straight_through: true,
    };
    let (loss, grads) = actor_objective(&actor, &critic, &terms).unwrap();
    assert_eq!(grads.max_abs(), 0.0);
    assert!((loss + 1.5).abs() < 1e-12);
}

#[test]
fn actor_climbs_to_critic_optimum() {
    // one agent, two actions; Q(a) = −|a₀ − 0.5| peaks at an even split
    let critic = Mlp::from_parts(
        ndarray::arr2(&[[0.0, 1.0, 0.0], [0.0, -1.0, 0.0]]),
        arr1(&[-0.5, 0.5]),
        ndarray::arr2(&[[-1.0, -1.0]]),
        arr1(&[0.0]),
    )
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut actor = Mlp::new(1, 8, 2, &mut rng);
    actor.b2_mut()[0] = 2.0;
    let mut opt = nn::AdamState::new(&actor, 1e-3);
    let states = Array2::from_elem((8, 1), 1.0);
    let joint = Array2::zeros((8, 2));
    let orders = orders_for(0, 1, 8, &mut rng);
    let noise = Array2::zeros((8, 2));
    let terms = ActorTerms {
        kind: CriticKind::Amc,
        agent: 0,
        states: states.view(),
        joint: joint.view(),
        orders: &orders,
        noise: noise.view(),
        weights: &[1.0; 8],
        entropy_coef: 0.0,
        straight_through: false,
    };
    for _ in 0..5000 {
        let (_, g) = actor_objective(&actor, &critic, &terms).unwrap();
        nn::adam_step(&mut actor, &g, &mut opt).unwrap();
    }
    let p = nn::softmax(&actor.predict_one(&[1.0]).unwrap(), 1.0).unwrap();
    assert!((p[0] - 0.5).abs() < 1e-2, "{p:?}");
}

fn terminal_transition(n: usize, obs: usize, reward: f64) -> Transition {
    Transition {
        state: (0..n * obs).map(|j| 0.1 * j as f64).collect(),
        actions: (0..n).map(|i| i % 2).collect(),
        reward,
        next_state: vec![0.0; n * obs],
        done: true,
        episode_end: true,
        active: vec![true; n],
        next_active: vec![true; n],
    }
}

#[test]
fn shapley_values_sum_to_the_reward() {
    let spec = EnvSpec { n_agents: 3, obs_dim: 4, n_actions: 5, episode_limit: 1 };
    let mut cfg = LearnerConfig::new(Algorithm::Sqddpg);
    cfg.batch_size = 32;
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut learner = DdpgLearner::new(cfg, spec, &mut rng);
    let t = terminal_transition(3, 4, 3.0);
    let batch = Batch::from_transitions(&vec![&t; 32]).unwrap();
    for _ in 0..2000 {
        learner.critic_update(&batch, &mut rng).unwrap();
    }
    let onehots: Vec<Vec<f64>> = t.actions.iter().map(|&a| (0..5).map(|j| if j == a { 1.0 } else { 0.0 }).collect()).collect();
    let total: f64 = (0..3)
        .map(|i| exact_shapley_q(&learner.critic_nets()[i].live, i, &t.state, &onehots).unwrap())
        .sum();
    assert!((total - 3.0).abs() < 0.01, "Σ Q = {total}");
}

#[test]
fn fixed_batch_critic_loss_decreases() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let p = problem(&mut rng);
    let mut critics: Vec<Mlp> = (0..p.n).map(|_| Mlp::new(p.n * p.obs + p.n * p.acts, 16, 1, &mut rng)).collect();
    let mut opts: Vec<_> = critics.iter().map(|c| nn::AdamState::new(c, 1e-3)).collect();
    let rows: Vec<_> = (0..p.n)
        .map(|i| {
            let o = orders_for(i, p.n, p.g * p.m, &mut rng);
            critic_rows(CriticKind::Amc, i, p.obs, p.acts, p.states.view(), p.joint.view(), &o).unwrap()
        })
        .collect();
    let y: Vec<f64> = (0..p.g).map(|_| rng.random_range(1.0..3.0)).collect();
    let mut last = f64::INFINITY;
    for _ in 0..100 {
        let refs: Vec<&Mlp> = critics.iter().collect();
        let (loss, grads) = sqddpg_critic_loss(&refs, &rows, &y).unwrap();
        assert!(loss < last, "{loss} after {last}");
        last = loss;
        for ((c, o), g) in critics.iter_mut().zip(&mut opts).zip(grads) {
            nn::adam_step(c, &g, o).unwrap();
        }
    }
}

#[test]
fn exploration_is_uniform_for_zero_logits() {
    let actor = constant_net(2, 0.0);
    let wide = Mlp::from_parts(Array2::zeros((2, 2)), Array1::zeros(2), Array2::zeros((5, 2)), Array1::zeros(5)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut counts = [0usize; 5];
    for _ in 0..10_000 {
        let a = select_actions(&[&wide], &[0.3, 0.1], true, &mut rng).unwrap();
        counts[a[0]] += 1;
    }
    for c in counts {
        assert!((c as f64 / 1e4 - 0.2).abs() < 0.02, "{counts:?}");
    }
    assert!(select_actions(&[&actor], &[0.0], true, &mut rng).is_err());
}

#[test]
fn counterfactual_baseline_cancels_constants() {
    let q = [4.0; 5];
    let pi = [0.1, 0.2, 0.3, 0.2, 0.2];
    let expected: f64 = (0..5).map(|a| pi[a] * coma_advantage(&q, &pi, a)).sum();
    assert!(expected.abs() < 1e-12);
    assert!(coma_advantage(&q, &[0.0, 1.0, 0.0, 0.0, 0.0], 1).abs() < 1e-12);
}

#[test]
fn returns_reset_at_episode_ends() {
    let mut ts: Vec<Transition> = (0..4).map(|k| terminal_transition(1, 1, k as f64 + 1.0)).collect();
    ts[0].done = false;
    ts[0].episode_end = false;
    ts[1].done = false; // truncated end: bootstrap
    ts[3].done = false;
    ts[3].episode_end = false;
    let g = discounted_returns(&ts, 0.5, |t| 10.0 * t as f64);
    // t=3 tail is the segment end bootstrap 30; t=2 terminal; t=1 truncated
    assert_eq!(g, vec![1.0 + 0.5 * (2.0 + 5.0), 2.0 + 0.5 * 10.0, 3.0, 4.0 + 15.0]);
}

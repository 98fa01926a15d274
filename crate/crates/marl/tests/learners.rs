use envs::EnvSpec;
use marl::policy::entropy;
use marl::{
    build_learner, Algorithm, Batch, Bundle, CriticKind, DdpgLearner, A2cLearner, Learner, LearnerConfig, ReplayBuffer,
    Transition,
};
use ndarray::arr1;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SPEC: EnvSpec = EnvSpec { n_agents: 3, obs_dim: 4, n_actions: 5, episode_limit: 10 };

fn random_transition(rng: &mut ChaCha8Rng, reward: f64, done: bool) -> Transition {
    let d = SPEC.state_dim();
    Transition {
        state: (0..d).map(|_| rng.random_range(-1.0..1.0)).collect(),
        actions: (0..SPEC.n_agents).map(|_| rng.random_range(0..SPEC.n_actions)).collect(),
        reward,
        next_state: (0..d).map(|_| rng.random_range(-1.0..1.0)).collect(),
        done,
        episode_end: done,
        active: vec![true; SPEC.n_agents],
        next_active: vec![true; SPEC.n_agents],
    }
}

fn zero_reward_critic_vanishes(alg: Algorithm) {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let mut learner = DdpgLearner::new(LearnerConfig::new(alg), SPEC, &mut rng);
    let ts: Vec<Transition> = (0..64).map(|_| random_transition(&mut rng, 0.0, true)).collect();
    let batch = Batch::from_transitions(&ts.iter().collect::<Vec<_>>()).unwrap();
    for _ in 0..500 {
        learner.critic_update(&batch, &mut rng).unwrap();
    }
    for t in &ts {
        for q in learner.credits(&t.state, &t.actions, &mut rng).unwrap() {
            assert!(q.abs() < 1e-2, "{alg}: {q}");
        }
    }
}

#[test]
fn independent_critics_learn_zero() {
    zero_reward_critic_vanishes(Algorithm::Iddpg);
}

#[test]
fn centralized_critics_learn_zero() {
    zero_reward_critic_vanishes(Algorithm::Maddpg);
}

#[test]
fn critic_input_widths() {
    let d = SPEC.state_dim();
    assert_eq!(CriticKind::Central.input_dim(&SPEC), d + 3 * 5);
    assert_eq!(CriticKind::Amc.input_dim(&SPEC), d + 3 * 5);
    assert_eq!(CriticKind::Local.input_dim(&SPEC), 4 + 5);
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let l = DdpgLearner::new(LearnerConfig::new(Algorithm::Maddpg), SPEC, &mut rng);
    assert!(l.critics().iter().all(|c| c.in_dim() == d + 15));
}

#[test]
fn state_value_learns_zero_returns() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let mut cfg = LearnerConfig::new(Algorithm::Ia2c);
    cfg.critic_lr = 1e-3;
    let mut learner = A2cLearner::new(cfg, SPEC, &mut rng);
    let rollout: Vec<Transition> = (0..32).map(|_| random_transition(&mut rng, 0.0, true)).collect();
    for _ in 0..2000 {
        learner.update(&rollout, &mut rng).unwrap();
    }
    for t in &rollout {
        for v in learner.credits(&t.state, &t.actions, &mut rng).unwrap() {
            assert!(v.abs() < 1e-2, "{v}");
        }
    }
}

#[test]
fn uniform_policy_has_maximal_entropy() {
    for n in 2..8 {
        let p = arr1(&vec![1.0 / n as f64; n]);
        assert!((entropy(p.view()) - (n as f64).ln()).abs() < 1e-12);
    }
    assert_eq!(entropy(arr1(&[1.0, 0.0]).view()), 0.0);
}

fn run(alg: Algorithm, seed: u64) -> (Vec<f64>, Vec<Vec<u8>>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cfg = LearnerConfig::new(alg);
    cfg.batch_size = 8;
    cfg.behaviour_update_freq = 5;
    cfg.target_update_freq = 10;
    let mut learner = build_learner(cfg, SPEC, &mut rng);
    let mut losses = Vec::new();
    for step in 0..60 {
        let r = rng.random_range(-1.0..0.0);
        let mut t = random_transition(&mut rng, r, step % 10 == 9);
        t.actions = learner.act(&t.state, true, &mut rng).unwrap();
        if let Some(s) = learner.observe(t, &mut rng).unwrap() {
            losses.extend([s.critic_loss, s.actor_loss]);
        }
    }
    let blobs = learner.actors().iter().chain(learner.critics().iter()).map(|m| m.to_bytes()).collect();
    (losses, blobs)
}

#[test]
fn same_seed_same_parameters() {
    for alg in Algorithm::ALL {
        let (la, ba) = run(alg, 5);
        let (lb, bb) = run(alg, 5);
        assert!(!la.is_empty(), "{alg} never updated");
        assert!(la.iter().all(|v| v.is_finite()));
        assert_eq!(la, lb, "{alg}");
        assert_eq!(ba, bb, "{alg}");
        let (_, bc) = run(alg, 6);
        assert_ne!(ba, bc, "{alg}");
    }
}

#[test]
fn replay_ring_and_sampling() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let mut buf = ReplayBuffer::new(4);
    assert!(buf.sample(1, &mut rng).is_err());
    for k in 0..6 {
        buf.push(random_transition(&mut rng, k as f64, false));
    }
    assert_eq!(buf.len(), 4);
    let mut kept: Vec<f64> = buf.iter().map(|t| t.reward).collect();
    kept.sort_by(f64::total_cmp);
    assert_eq!(kept, vec![2.0, 3.0, 4.0, 5.0]);
    assert!(buf.sample(5, &mut rng).is_err());
    let a = buf.sample(3, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
    let b = buf.sample(3, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
    assert_eq!(a.rewards, b.rewards);
    assert_eq!(a.states.dim(), (3, SPEC.state_dim()));
    assert_eq!(a.actions.dim(), (3, 3));
}

#[test]
fn bundle_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    let dir = tempfile::tempdir().unwrap();
    for alg in Algorithm::ALL {
        let learner = build_learner(LearnerConfig::new(alg), SPEC, &mut rng);
        let b = Bundle::capture(learner.as_ref(), "coopnav", "abc123", 7);
        let path = dir.path().join(alg.to_string());
        b.save(&path).unwrap();
        let loaded = Bundle::load(&path).unwrap();
        assert_eq!(loaded.manifest, b.manifest);
        let mut fresh = build_learner(LearnerConfig::new(alg), SPEC, &mut rng);
        loaded.install(fresh.as_mut(), "coopnav").unwrap();
        let state = vec![0.2; SPEC.state_dim()];
        for (x, y) in fresh.actors().iter().zip(learner.actors()) {
            assert_eq!(x.to_bytes(), y.to_bytes());
        }
        assert_eq!(fresh.act(&state, false, &mut rng).unwrap(), learner.act(&state, false, &mut rng).unwrap());
        let mut other = build_learner(LearnerConfig::new(alg), SPEC, &mut rng);
        assert!(loaded.install(other.as_mut(), "prey").is_err());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]
    #[test]
    fn greedy_actions_are_valid(seed in 0u64..1000, explore in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let learner = build_learner(LearnerConfig::new(Algorithm::Sqddpg), SPEC, &mut rng);
        let state: Vec<f64> = (0..SPEC.state_dim()).map(|_| rng.random_range(-5.0..5.0)).collect();
        let a = learner.act(&state, explore, &mut rng).unwrap();
        prop_assert_eq!(a.len(), 3);
        prop_assert!(a.iter().all(|&x| x < 5));
    }
}

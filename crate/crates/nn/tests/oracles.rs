use ndarray::{Array2, ArrayView2};
use nn::{adam_step, argmax, gumbel_softmax_sample, soft_update, softmax, softmax_backward, AdamState, Grads, Mlp};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Forward pass with explicit scalar loops, no ndarray arithmetic.
fn loop_forward(m: &Mlp, x: &[f64]) -> Vec<f64> {
    let (w1, b1, w2, b2) = (m.w1(), m.b1(), m.w2(), m.b2());
    let mut h = vec![0.0; m.hidden_dim()];
    for j in 0..m.hidden_dim() {
        let mut s = b1[j];
        for i in 0..m.in_dim() {
            s += w1[[j, i]] * x[i];
        }
        h[j] = if s > 0.0 { s } else { 0.0 };
    }
    (0..m.out_dim())
        .map(|k| b2[k] + (0..m.hidden_dim()).map(|j| w2[[k, j]] * h[j]).sum::<f64>())
        .collect()
}

fn random_case(rng: &mut ChaCha8Rng) -> (Mlp, Vec<f64>, Vec<f64>) {
    let (i, h, o) = (rng.random_range(1..8), rng.random_range(1..12), rng.random_range(1..5));
    let m = Mlp::new(i, h, o, rng);
    let x = (0..i).map(|_| rng.random_range(-2.0..2.0)).collect();
    let u = (0..o).map(|_| rng.random_range(-1.0..1.0)).collect();
    (m, x, u)
}

fn objective(m: &Mlp, x: &[f64], u: &[f64]) -> f64 {
    loop_forward(m, x).iter().zip(u).map(|(y, w)| y * w).sum()
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
}

fn perturbed(m: &Mlp, block: usize, idx: usize, delta: f64) -> Mlp {
    let (mut w1, mut b1, mut w2, mut b2) = (m.w1().clone(), m.b1().clone(), m.w2().clone(), m.b2().clone());
    match block {
        0 => w1.as_slice_mut().unwrap()[idx] += delta,
        1 => b1[idx] += delta,
        2 => w2.as_slice_mut().unwrap()[idx] += delta,
        _ => b2[idx] += delta,
    }
    Mlp::from_parts(w1, b1, w2, b2).unwrap()
}

/// Whether any hidden pre-activation sits within `margin` of the kink.
fn near_kink(m: &Mlp, x: &[f64], margin: f64) -> bool {
    (0..m.hidden_dim()).any(|j| {
        let s: f64 = m.b1()[j] + (0..m.in_dim()).map(|i| m.w1()[[j, i]] * x[i]).sum::<f64>();
        s.abs() < margin
    })
}

#[test]
fn forward_matches_scalar_loops() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..50 {
        let (m, x, _) = random_case(&mut rng);
        let (y, _) = m.forward(&x).unwrap();
        for (a, b) in y.iter().zip(loop_forward(&m, &x)) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}

#[test]
fn backward_matches_central_differences() {
    let h = 1e-5;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut checked = 0;
    let mut worst: f64 = 0.0;
    while checked < 50 {
        let (m, x, u) = random_case(&mut rng);
        if near_kink(&m, &x, 1e-3) {
            continue;
        }
        let (_, cache) = m.forward(&x).unwrap();
        let (g, dx) = m.backward(&cache, &u).unwrap();
        let analytic = [
            g.w1.as_slice().unwrap().to_vec(),
            g.b1.to_vec(),
            g.w2.as_slice().unwrap().to_vec(),
            g.b2.to_vec(),
        ];
        for (block, grads) in analytic.iter().enumerate() {
            for (idx, &a) in grads.iter().enumerate() {
                let fd = (objective(&perturbed(&m, block, idx, h), &x, &u)
                    - objective(&perturbed(&m, block, idx, -h), &x, &u))
                    / (2.0 * h);
                worst = worst.max(rel_err(a, fd));
            }
        }
        for (i, &a) in dx.iter().enumerate() {
            let (mut xp, mut xm) = (x.clone(), x.clone());
            xp[i] += h;
            xm[i] -= h;
            let fd = (objective(&m, &xp, &u) - objective(&m, &xm, &u)) / (2.0 * h);
            worst = worst.max(rel_err(a, fd));
        }
        checked += 1;
    }
    assert!(worst < 1e-4, "max relative error {worst}");
}

#[test]
fn batched_backward_sums_rows() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let m = Mlp::new(4, 6, 2, &mut rng);
    let xs = Array2::from_shape_fn((5, 4), |_| rng.random_range(-1.0..1.0));
    let us = Array2::from_shape_fn((5, 2), |_| rng.random_range(-1.0..1.0));
    let (_, cache) = m.forward_batch(xs.view()).unwrap();
    let (g, dx) = m.backward_batch(&cache, us.view()).unwrap();
    let mut total = Grads::zeros_like(&m);
    for r in 0..5 {
        let (_, c) = m.forward(xs.row(r).as_slice().unwrap()).unwrap();
        let (gr, dxr) = m.backward(&c, us.row(r).as_slice().unwrap()).unwrap();
        total.add(&gr);
        for (a, b) in dxr.iter().zip(dx.row(r)) {
            assert!((a - b).abs() < 1e-12);
        }
    }
    total.scale(-1.0);
    total.add(&g);
    assert!(total.max_abs() < 1e-12);
}

#[test]
fn adam_fits_quadratic_toy() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut m = Mlp::new(2, 16, 1, &mut rng);
    let xs = Array2::from_shape_fn((8, 2), |_| rng.random_range(-1.0..1.0));
    let ts: Vec<f64> = xs.rows().into_iter().map(|r| 0.5 * r[0] - r[1] + 0.3).collect();
    let loss = |m: &Mlp| {
        let y = m.predict(xs.view()).unwrap();
        y.column(0).iter().zip(&ts).map(|(a, b)| 0.5 * (a - b).powi(2)).sum::<f64>()
    };
    let start = loss(&m);
    let mut s = AdamState::new(&m, 1e-2);
    for step in 0..10_000u64 {
        let (y, cache) = m.forward_batch(xs.view()).unwrap();
        let up = Array2::from_shape_fn((8, 1), |(r, _)| y[[r, 0]] - ts[r]);
        let (g, _) = m.backward_batch(&cache, up.view()).unwrap();
        adam_step(&mut m, &g, &mut s).unwrap();
        assert_eq!(s.step_count(), step + 1);
    }
    m.check_finite().unwrap();
    let end = loss(&m);
    assert!(end <= 0.01 * start, "{start} -> {end}");
}

#[test]
fn identical_params_stay_identical() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut a = Mlp::new(3, 4, 2, &mut rng);
    let mut b = a.clone();
    let (mut sa, mut sb) = (AdamState::new(&a, 1e-3), AdamState::new(&b, 1e-3));
    for _ in 0..20 {
        let x: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
        let (_, c) = a.forward(&x).unwrap();
        let (g, _) = a.backward(&c, &[1.0, -0.5]).unwrap();
        adam_step(&mut a, &g, &mut sa).unwrap();
        adam_step(&mut b, &g, &mut sb).unwrap();
    }
    assert_eq!(a, b);
}

fn distance(a: &Mlp, b: &Mlp) -> f64 {
    let d = |x: ArrayView2<f64>, y: ArrayView2<f64>| (&x - &y).mapv(|v| v * v).sum();
    let e = |x: &ndarray::Array1<f64>, y: &ndarray::Array1<f64>| (x - y).mapv(|v| v * v).sum();
    (d(a.w1().view(), b.w1().view()) + e(a.b1(), b.b1()) + d(a.w2().view(), b.w2().view()) + e(a.b2(), b.b2())).sqrt()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn soft_update_contracts(seed in any::<u64>(), tau in 0.0f64..=1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let src = Mlp::new(3, 5, 2, &mut rng);
        let mut tgt = Mlp::new(3, 5, 2, &mut rng);
        let before = distance(&tgt, &src);
        soft_update(&mut tgt, &src, tau).unwrap();
        let after = distance(&tgt, &src);
        prop_assert!((after - (1.0 - tau) * before).abs() < 1e-12);
    }

    #[test]
    fn gumbel_output_is_distribution(
        logits in prop::collection::vec(-20.0f64..20.0, 1..8),
        temperature in 0.05f64..5.0,
        seed in any::<u64>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = gumbel_softmax_sample(&logits, temperature, &mut rng).unwrap();
        prop_assert!(p.iter().all(|&x| x > 0.0));
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }
}

#[test]
fn confident_logits_win_at_low_temperature() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let hits = (0..10_000)
        .filter(|_| argmax(&gumbel_softmax_sample(&[10.0, -10.0], 0.1, &mut rng).unwrap()) == 0)
        .count();
    assert!(hits as f64 / 10_000.0 > 0.99);
}

#[test]
fn zero_logits_give_uniform_argmax() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut counts = [0usize; 5];
    let draws = 100_000;
    for _ in 0..draws {
        counts[argmax(&gumbel_softmax_sample(&[0.0; 5], 1.0, &mut rng).unwrap())] += 1;
    }
    for c in counts {
        assert!((c as f64 / draws as f64 - 0.2).abs() < 0.02);
    }
}

#[test]
fn argmax_frequencies_follow_softmax() {
    // Gumbel-max: argmax(l + g) ~ softmax(l); Pearson chi-square, 3 dof
    let logits = [1.0, 0.0, -0.5, 2.0];
    let probs = softmax(&logits, 1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let draws = 100_000;
    let mut counts = [0usize; 4];
    for _ in 0..draws {
        counts[argmax(&gumbel_softmax_sample(&logits, 1.0, &mut rng).unwrap())] += 1;
    }
    let stat: f64 = counts
        .iter()
        .zip(&probs)
        .map(|(&c, &p)| {
            let e = p * draws as f64;
            (c as f64 - e).powi(2) / e
        })
        .sum();
    // 0.999 quantile of chi-square with 3 dof
    assert!(stat < 16.266, "chi-square {stat}");
}

#[test]
fn softmax_backward_matches_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..20 {
        let t = rng.random_range(0.3..2.0);
        let z: Vec<f64> = (0..5).map(|_| rng.random_range(-2.0..2.0)).collect();
        let u: Vec<f64> = (0..5).map(|_| rng.random_range(-1.0..1.0)).collect();
        let p = softmax(&z, t).unwrap();
        let g = softmax_backward(&p, &u, t).unwrap();
        for i in 0..5 {
            let f = |d: f64| {
                let mut zz = z.clone();
                zz[i] += d;
                softmax(&zz, t).unwrap().iter().zip(&u).map(|(a, b)| a * b).sum::<f64>()
            };
            let fd = (f(1e-6) - f(-1e-6)) / 2e-6;
            assert!(rel_err(g[i], fd) < 1e-5);
        }
    }
}

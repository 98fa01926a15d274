use crate::{Grads, Mlp, NnError, Result};

/// Adam moments for one [`Mlp`].
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    m: Grads,
    v: Grads,
    t: u64,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    pub fn new(mlp: &Mlp, lr: f64) -> Self {
        Self {
            m: Grads::zeros_like(mlp),
            v: Grads::zeros_like(mlp),
            t: 0,
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.t
    }

    pub fn first_moment(&self) -> &Grads {
        &self.m
    }

    pub fn second_moment(&self) -> &Grads {
        &self.v
    }
}

/// One bias-corrected Adam update of `mlp` along `-g`.
pub fn adam_step(mlp: &mut Mlp, g: &Grads, s: &mut AdamState) -> Result<()> {
    g.check_shape(mlp)?;
    s.m.check_shape(mlp)?;
    g.check_finite()?;
    s.t += 1;
    let t = s.t as i32;
    let (b1, b2) = (s.beta1, s.beta2);
    let c1 = 1.0 - b1.powi(t);
    let c2 = 1.0 - b2.powi(t);
    let grads = g.blocks();
    for (((p, m), v), (_, gb)) in mlp
        .blocks_mut()
        .into_iter()
        .zip(s.m.blocks_mut())
        .zip(s.v.blocks_mut())
        .zip(grads)
    {
        for i in 0..p.len() {
            let gi = gb[i];
            m[i] = b1 * m[i] + (1.0 - b1) * gi;
            v[i] = b2 * v[i] + (1.0 - b2) * gi * gi;
            let mh = m[i] / c1;
            let vh = v[i] / c2;
            p[i] -= s.lr * mh / (vh.sqrt() + s.eps);
        }
    }
    mlp.check_finite()
}

/// `target ← τ·source + (1−τ)·target`, entrywise.
pub fn soft_update(target: &mut Mlp, source: &Mlp, tau: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&tau) {
        return Err(NnError::InvalidTau(tau));
    }
    if !target.same_shape(source) {
        return Err(NnError::Shape(format!(
            "target {:?}/{:?} vs source {:?}/{:?}",
            target.w1.dim(),
            target.w2.dim(),
            source.w1.dim(),
            source.w2.dim()
        )));
    }
    for (t, (_, s)) in target.blocks_mut().into_iter().zip(source.blocks()) {
        for (a, &b) in t.iter_mut().zip(s) {
            *a = tau * b + (1.0 - tau) * *a;
        }
    }
    Ok(())
}

//! Per-step credit traces over a fixed prey trajectory, as CSV and SVG.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use envs::{Environment, PreyPredator, Vec2};
use marl::Learner;

use crate::eval::{episode_rng, Policy};
use crate::{HarnessError, Result};

/// `(x − min)/(max − min)`; a constant input maps to zeros.
pub fn minmax_normalize(xs: &[f64]) -> Result<Vec<f64>> {
    if xs.is_empty() {
        return Err(HarnessError::TooFew("min-max normalization", 1));
    }
    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let range = hi - lo;
    Ok(xs
        .iter()
        .map(|&x| if range > 0.0 { (x - lo) / range } else { 0.0 })
        .collect())
}

/// A recorded prey episode: the state and joint action at every step plus
/// the positions of the predators and the prey.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub states: Vec<Vec<f64>>,
    pub actions: Vec<Vec<usize>>,
    pub predators: Vec<Vec<Vec2>>,
    pub prey: Vec<Vec2>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Index of the predator closest to the prey at `step`.
    pub fn nearest(&self, step: usize) -> usize {
        let prey = self.prey[step];
        let d: Vec<f64> = self.predators[step].iter().map(|p| p.dist(prey)).collect();
        nn::argmax(&d.iter().map(|x| -x).collect::<Vec<_>>())
    }
}

pub fn record_trajectory(policy: Policy<'_>, max_steps: usize, seed: u64) -> Result<Trajectory> {
    let mut env = PreyPredator::new();
    let mut rng = episode_rng(seed, 0);
    let mut step = env.reset(&mut rng);
    let mut tr = Trajectory {
        states: Vec::new(),
        actions: Vec::new(),
        predators: Vec::new(),
        prey: Vec::new(),
    };
    let n_pred = env.spec().n_agents;
    for _ in 0..max_steps {
        let actions = policy.actions(&step, env.spec().n_actions, &mut rng)?;
        tr.states.push(step.global_state.clone());
        tr.actions.push(actions.clone());
        tr.predators.push(env.world().pos[..n_pred].to_vec());
        tr.prey.push(env.prey());
        step = env.step(&actions, &mut rng)?;
        if step.finished() {
            break;
        }
    }
    Ok(tr)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CreditTrace {
    /// `raw[t][i]`: agent `i`'s credit at step `t`.
    pub raw: Vec<Vec<f64>>,
    /// Same layout, min-max normalized over the whole trace.
    pub normalized: Vec<Vec<f64>>,
}

impl CreditTrace {
    /// Fraction of steps whose highest-credit agent is the nearest predator.
    pub fn nearest_agreement(&self, tr: &Trajectory) -> f64 {
        let hits = (0..self.raw.len())
            .filter(|&t| nn::argmax(&self.raw[t]) == tr.nearest(t))
            .count();
        hits as f64 / self.raw.len().max(1) as f64
    }
}

pub fn credit_trace(learner: &dyn Learner, tr: &Trajectory, seed: u64) -> Result<CreditTrace> {
    if tr.is_empty() {
        return Err(HarnessError::TooFew("credit trace", 1));
    }
    let n = learner.spec().n_agents;
    if tr.predators[0].len() != n {
        return Err(HarnessError::Mismatch {
            found: format!("{n}-agent"),
            wanted: format!("{}-predator trajectory", tr.predators[0].len()),
        });
    }
    let mut rng = episode_rng(seed, 1);
    let raw = tr
        .states
        .iter()
        .zip(&tr.actions)
        .map(|(s, a)| learner.credits(s, a, &mut rng).map_err(HarnessError::from))
        .collect::<Result<Vec<_>>>()?;
    let flat = minmax_normalize(&raw.concat())?;
    let normalized = flat.chunks(n).map(<[f64]>::to_vec).collect();
    Ok(CreditTrace { raw, normalized })
}

pub const TRACE_HEADER: &str = "step,agent,credit,normalized,x,y,prey_x,prey_y";

pub fn trace_csv(trace: &CreditTrace, tr: &Trajectory) -> String {
    let mut s = String::from(TRACE_HEADER);
    s.push('\n');
    for (t, (raw, norm)) in trace.raw.iter().zip(&trace.normalized).enumerate() {
        for (i, (c, z)) in raw.iter().zip(norm).enumerate() {
            let p = tr.predators[t][i];
            let _ = writeln!(s, "{t},{i},{c},{z},{},{},{},{}", p.x, p.y, tr.prey[t].x, tr.prey[t].y);
        }
    }
    s
}

const COLOURS: [&str; 6] = ["#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

/// Two panels: trajectories on the left (square = start, circle = end,
/// prey in black) and normalized credit curves on the right.
pub fn trace_svg(trace: &CreditTrace, tr: &Trajectory) -> String {
    let (w, h, pad) = (400.0, 400.0, 20.0);
    let mut lo = Vec2 { x: f64::INFINITY, y: f64::INFINITY };
    let mut hi = Vec2 { x: f64::NEG_INFINITY, y: f64::NEG_INFINITY };
    for p in tr.predators.iter().flatten().chain(&tr.prey) {
        lo = Vec2 { x: lo.x.min(p.x), y: lo.y.min(p.y) };
        hi = Vec2 { x: hi.x.max(p.x), y: hi.y.max(p.y) };
    }
    let span = (hi.x - lo.x).max(hi.y - lo.y).max(1e-9);
    let map = |p: Vec2| (pad + (p.x - lo.x) / span * (w - 2.0 * pad), h - pad - (p.y - lo.y) / span * (h - 2.0 * pad));

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{h}" font-size="10">"#, 2.0 * w);
    let _ = writeln!(s, r#"<rect width="{}" height="{h}" fill="white"/>"#, 2.0 * w);
    let n = tr.predators.first().map_or(0, Vec::len);
    let mut paths: Vec<(String, Vec<Vec2>)> = (0..n)
        .map(|i| (COLOURS[i % COLOURS.len()].to_string(), tr.predators.iter().map(|ps| ps[i]).collect()))
        .collect();
    paths.push(("black".into(), tr.prey.clone()));
    for (colour, pts) in &paths {
        let line: Vec<String> = pts.iter().map(|&p| map(p)).map(|(x, y)| format!("{x:.1},{y:.1}")).collect();
        let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="{colour}"/>"#, line.join(" "));
        for &p in pts {
            let (x, y) = map(p);
            let _ = writeln!(s, r#"<circle cx="{x:.1}" cy="{y:.1}" r="1.5" fill="{colour}"/>"#);
        }
        if let (Some(&a), Some(&b)) = (pts.first(), pts.last()) {
            let (x, y) = map(a);
            let _ = writeln!(s, r#"<rect x="{:.1}" y="{:.1}" width="8" height="8" fill="{colour}"/>"#, x - 4.0, y - 4.0);
            let (x, y) = map(b);
            let _ = writeln!(s, r#"<circle cx="{x:.1}" cy="{y:.1}" r="5" fill="{colour}"/>"#);
        }
    }

    let steps = trace.normalized.len().max(2) - 1;
    let (x0, plot_w, plot_h) = (w + pad, w - 2.0 * pad, h - 2.0 * pad);
    let _ = writeln!(
        s,
        r#"<rect x="{x0}" y="{pad}" width="{plot_w}" height="{plot_h}" fill="none" stroke="grey"/>"#
    );
    for i in 0..n {
        let line: Vec<String> = trace
            .normalized
            .iter()
            .enumerate()
            .map(|(t, row)| {
                let x = x0 + t as f64 / steps as f64 * plot_w;
                let y = pad + (1.0 - row[i]) * plot_h;
                format!("{x:.1},{y:.1}")
            })
            .collect();
        let colour = COLOURS[i % COLOURS.len()];
        let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="{colour}"/>"#, line.join(" "));
        let _ = writeln!(s, r#"<text x="{}" y="{}" fill="{colour}">agent {i}</text>"#, x0 + 5.0, pad + 12.0 * (i + 1) as f64);
    }
    s.push_str("</svg>\n");
    s
}

pub fn export_credit_trace(trace: &CreditTrace, tr: &Trajectory, out_dir: &Path) -> Result<()> {
    fs::create_dir_all(out_dir)?;
    fs::write(out_dir.join("credit_trace.csv"), trace_csv(trace, tr))?;
    fs::write(out_dir.join("trace.svg"), trace_svg(trace, tr))?;
    Ok(())
}

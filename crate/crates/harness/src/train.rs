//! The outer training loop and its per-episode metrics log.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use envs::EnvKind;
use marl::{build_learner, Bundle, Learner, Transition};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::{HarnessError, Result, TrainConfig};

pub const METRICS_HEADER: &str = "episode,steps,mean_reward,return,collisions,turns_to_capture,success";

/// One line of `metrics.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRecord {
    pub episode: usize,
    pub steps: usize,
    pub mean_reward: f64,
    pub episode_return: f64,
    pub collisions: usize,
    /// Prey only: the step on which a predator reached the prey.
    pub turns_to_capture: Option<usize>,
    /// Traffic only: no collision during the episode.
    pub success: Option<bool>,
}

impl MetricsRecord {
    pub fn csv_row(&self) -> String {
        let opt = |v: Option<String>| v.unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{}",
            self.episode,
            self.steps,
            self.mean_reward,
            self.episode_return,
            self.collisions,
            opt(self.turns_to_capture.map(|t| t.to_string())),
            opt(self.success.map(|s| u8::from(s).to_string())),
        )
    }
}

pub fn metrics_csv(records: &[MetricsRecord]) -> String {
    let mut s = String::from(METRICS_HEADER);
    s.push('\n');
    for r in records {
        let _ = writeln!(s, "{}", r.csv_row());
    }
    s
}

/// Trailing moving average; entry `k` averages `xs[k+1-window..=k]`, or
/// everything so far while fewer than `window` values exist.
pub fn moving_average(xs: &[f64], window: usize) -> Vec<f64> {
    let window = window.max(1);
    let mut out = Vec::with_capacity(xs.len());
    let mut sum = 0.0;
    for (k, &x) in xs.iter().enumerate() {
        sum += x;
        if k >= window {
            sum -= xs[k - window];
        }
        out.push(sum / (k + 1).min(window) as f64);
    }
    out
}

pub const SMOOTHING_WINDOW: usize = 100;

pub struct TrainOutcome {
    pub learner: Box<dyn Learner>,
    pub records: Vec<MetricsRecord>,
    /// `None` when the run kept no files.
    pub out_dir: Option<PathBuf>,
}

impl TrainOutcome {
    pub fn mean_rewards(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.mean_reward).collect()
    }
}

/// Trains per `cfg`. With `out_dir`, writes `config.txt`, `metrics.csv`,
/// `timing.csv`, periodic bundles under `checkpoints/`, the bundle with the
/// best recent mean return under `best/`, and the final one under `final/`.
pub fn run_training(cfg: &TrainConfig, out_dir: Option<&Path>) -> Result<TrainOutcome> {
    cfg.validate()?;
    let kind = cfg.environment;
    let spec = kind.spec();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut learner = build_learner(cfg.learner_config(), spec, &mut rng);
    let mut env = kind.build();
    let hash = cfg.hash();
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("config.txt"), cfg.to_text())?;
    }
    let started = Instant::now();
    let mut timing = String::from("episode,seconds\n");
    let mut records = Vec::with_capacity(cfg.episodes);
    let mut best = f64::NEG_INFINITY;

    for episode in 0..cfg.episodes {
        let mut step = env.reset(&mut rng);
        let mut rec = MetricsRecord {
            episode,
            steps: 0,
            mean_reward: 0.0,
            episode_return: 0.0,
            collisions: 0,
            turns_to_capture: None,
            success: None,
        };
        while rec.steps < cfg.episode_length {
            let actions = learner.act(&step.global_state, true, &mut rng)?;
            let next = env.step(&actions, &mut rng)?;
            rec.steps += 1;
            rec.episode_return += next.reward;
            rec.collisions += next.info.collisions;
            if next.info.captured && rec.turns_to_capture.is_none() {
                rec.turns_to_capture = Some(rec.steps);
            }
            let end = next.finished() || rec.steps == cfg.episode_length;
            let t = Transition {
                state: std::mem::take(&mut step.global_state),
                actions,
                reward: next.reward,
                next_state: next.global_state.clone(),
                done: next.done,
                episode_end: end,
                active: std::mem::take(&mut step.active),
                next_active: next.active.clone(),
            };
            if let Some(stats) = learner.observe(t, &mut rng)? {
                for (what, v) in [("critic loss", stats.critic_loss), ("actor loss", stats.actor_loss)] {
                    if !v.is_finite() {
                        return Err(HarnessError::NonFiniteLoss {
                            what,
                            episode,
                            step: rec.steps,
                        });
                    }
                }
            }
            step = next;
            if end {
                break;
            }
        }
        rec.mean_reward = rec.episode_return / rec.steps.max(1) as f64;
        if let EnvKind::Traffic(_) = kind {
            rec.success = Some(rec.collisions == 0);
        }
        records.push(rec);

        if let Some(dir) = out_dir {
            let _ = writeln!(timing, "{},{:.3}", episode, started.elapsed().as_secs_f64());
            let done = episode + 1;
            if cfg.checkpoint_every > 0 && done % cfg.checkpoint_every == 0 {
                let bundle = Bundle::capture(learner.as_ref(), &kind.to_string(), &hash, done);
                bundle.save(&dir.join("checkpoints").join(format!("episode_{done:05}")))?;
                let recent = &records[done - cfg.checkpoint_every..];
                let score = recent.iter().map(|r| r.episode_return).sum::<f64>() / recent.len() as f64;
                if score > best {
                    best = score;
                    bundle.save(&dir.join("best"))?;
                }
            }
        }
    }

    if let Some(dir) = out_dir {
        fs::write(dir.join("metrics.csv"), metrics_csv(&records))?;
        fs::write(dir.join("timing.csv"), timing)?;
        let bundle = Bundle::capture(learner.as_ref(), &kind.to_string(), &hash, cfg.episodes);
        bundle.save(&dir.join("final"))?;
        if !dir.join("best").exists() {
            bundle.save(&dir.join("best"))?;
        }
    }
    Ok(TrainOutcome {
        learner,
        records,
        out_dir: out_dir.map(Path::to_path_buf),
    })
}

/// Loads a bundle into a fresh learner with matching network sizes.
pub fn load_checkpoint(dir: &Path) -> Result<(Box<dyn Learner>, EnvKind)> {
    let bundle = Bundle::load(dir)?;
    let kind: EnvKind = bundle.manifest.environment.parse()?;
    let hidden = bundle
        .actors
        .first()
        .map(|a| a.hidden_dim())
        .ok_or_else(|| HarnessError::Config(format!("{} holds no actors", dir.display())))?;
    let mut cfg = TrainConfig::defaults(bundle.manifest.algorithm, kind).learner_config();
    cfg.hidden = hidden;
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut learner = build_learner(cfg, kind.spec(), &mut rng);
    bundle.install(learner.as_mut(), &bundle.manifest.environment)?;
    Ok((learner, kind))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smoothing() {
        assert_eq!(moving_average(&[1.0, 3.0, 5.0, 7.0], 2), vec![1.0, 2.0, 4.0, 6.0]);
        assert_eq!(moving_average(&[2.0; 5], 100), vec![2.0; 5]);
        assert!(moving_average(&[], 3).is_empty());
    }

    #[test]
    fn optional_columns_stay_empty() {
        let r = MetricsRecord {
            episode: 3,
            steps: 10,
            mean_reward: -0.5,
            episode_return: -5.0,
            collisions: 0,
            turns_to_capture: None,
            success: Some(true),
        };
        assert_eq!(r.csv_row(), "3,10,-0.5,-5,0,,1");
        assert_eq!(METRICS_HEADER.split(',').count(), r.csv_row().split(',').count());
    }
}

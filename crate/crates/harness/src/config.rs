//! Training configuration: per-environment defaults, a flat `key=value`
//! file format and validation.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use envs::{Difficulty, EnvKind};
use marl::{Algorithm, LearnerConfig};
use sha2::{Digest, Sha256};

use crate::{HarnessError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub algorithm: Algorithm,
    pub environment: EnvKind,
    pub sample_size: usize,
    pub hidden_units: usize,
    pub episodes: usize,
    pub episode_length: usize,
    pub gamma: f64,
    pub behaviour_update_freq: usize,
    pub target_update_freq: usize,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub target_tau: f64,
    pub entropy_coef: f64,
    pub batch_size: usize,
    pub seed: u64,
    pub replay_capacity: usize,
    pub grad_clip: f64,
    /// Episodes between checkpoint bundles; 0 keeps only the final one.
    pub checkpoint_every: usize,
}

pub const KEYS: [&str; 19] = [
    "algorithm",
    "environment",
    "difficulty",
    "sample_size",
    "hidden_units",
    "episodes",
    "episode_length",
    "gamma",
    "behaviour_update_freq",
    "target_update_freq",
    "actor_lr",
    "critic_lr",
    "target_tau",
    "entropy_coef",
    "batch_size",
    "seed",
    "replay_capacity",
    "grad_clip",
    "checkpoint_every",
];

impl TrainConfig {
    /// Table values for `environment`, with the learning-rate exceptions
    /// of the on-policy baselines.
    pub fn defaults(algorithm: Algorithm, environment: EnvKind) -> Self {
        let mut c = Self {
            algorithm,
            environment,
            sample_size: 1,
            hidden_units: 32,
            episodes: 5000,
            episode_length: 200,
            gamma: 0.9,
            behaviour_update_freq: 100,
            target_update_freq: 200,
            actor_lr: 1e-4,
            critic_lr: 1e-3,
            target_tau: 0.1,
            entropy_coef: 1e-2,
            batch_size: 32,
            seed: 0,
            replay_capacity: 10_000,
            grad_clip: 1.0,
            checkpoint_every: 500,
        };
        match environment {
            EnvKind::CoopNav => match algorithm {
                Algorithm::Coma => (c.actor_lr, c.critic_lr) = (1e-2, 1e-4),
                Algorithm::Ia2c => (c.actor_lr, c.critic_lr) = (1e-6, 1e-5),
                _ => {}
            },
            EnvKind::Prey => {
                c.hidden_units = 128;
                c.gamma = 0.99;
                c.critic_lr = 5e-4;
                c.entropy_coef = 1e-3;
                c.batch_size = 128;
                if algorithm.on_policy() {
                    (c.actor_lr, c.critic_lr) = (1e-3, 1e-4);
                }
            }
            EnvKind::Traffic(d) => {
                c.hidden_units = 128;
                c.gamma = 0.99;
                c.behaviour_update_freq = 25;
                c.target_update_freq = 50;
                c.entropy_coef = 1e-4;
                (c.episodes, c.episode_length, c.batch_size) = match d {
                    Difficulty::Easy => (2000, 50, 64),
                    Difficulty::Medium => (5000, 50, 32),
                    Difficulty::Hard => (2000, 100, 32),
                };
                c.checkpoint_every = 200;
            }
        }
        c
    }

    /// Builds a config from `key=value` overrides applied in order over the
    /// defaults picked by the final `algorithm` and `environment`.
    pub fn from_pairs(pairs: &[(String, String)]) -> Result<Self> {
        let last = |key: &str| pairs.iter().rev().find(|(k, _)| k == key).map(|(_, v)| v.as_str());
        let algorithm: Algorithm = last("algorithm")
            .ok_or_else(|| HarnessError::Config("missing `algorithm`".into()))?
            .parse()?;
        let env_name = last("environment").ok_or_else(|| HarnessError::Config("missing `environment`".into()))?;
        let environment = match (env_name.parse::<EnvKind>(), last("difficulty")) {
            (Ok(EnvKind::Traffic(_)), Some(d)) => EnvKind::Traffic(d.parse()?),
            (Ok(kind), None) => kind,
            _ => EnvKind::from_name(env_name, last("difficulty"))?,
        };
        let mut cfg = Self::defaults(algorithm, environment);
        for (k, v) in pairs {
            cfg.set(k, v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path, overrides: &[(String, String)]) -> Result<Self> {
        let mut pairs = parse_pairs(&fs::read_to_string(path)?)?;
        pairs.extend_from_slice(overrides);
        Self::from_pairs(&pairs)
    }

    fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
            value.parse().map_err(|_| HarnessError::InvalidValue {
                key: key.into(),
                reason: format!("cannot parse `{value}`"),
            })
        }
        match key {
            "algorithm" | "environment" | "difficulty" => {}
            "sample_size" => self.sample_size = num(key, value)?,
            "hidden_units" => self.hidden_units = num(key, value)?,
            "episodes" => self.episodes = num(key, value)?,
            "episode_length" => self.episode_length = num(key, value)?,
            "gamma" => self.gamma = num(key, value)?,
            "behaviour_update_freq" => self.behaviour_update_freq = num(key, value)?,
            "target_update_freq" => self.target_update_freq = num(key, value)?,
            "actor_lr" => self.actor_lr = num(key, value)?,
            "critic_lr" => self.critic_lr = num(key, value)?,
            "target_tau" => self.target_tau = num(key, value)?,
            "entropy_coef" => self.entropy_coef = num(key, value)?,
            "batch_size" => self.batch_size = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "replay_capacity" => self.replay_capacity = num(key, value)?,
            "grad_clip" => self.grad_clip = num(key, value)?,
            "checkpoint_every" => self.checkpoint_every = num(key, value)?,
            other => return Err(HarnessError::UnknownKey(other.into())),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, reason: &str| {
            Err(HarnessError::InvalidValue {
                key: key.into(),
                reason: reason.into(),
            })
        };
        let counts = [
            ("sample_size", self.sample_size),
            ("hidden_units", self.hidden_units),
            ("episodes", self.episodes),
            ("episode_length", self.episode_length),
            ("behaviour_update_freq", self.behaviour_update_freq),
            ("target_update_freq", self.target_update_freq),
            ("batch_size", self.batch_size),
            ("replay_capacity", self.replay_capacity),
        ];
        for (key, v) in counts {
            if v == 0 {
                return bad(key, "must be at least 1");
            }
        }
        for (key, v) in [("actor_lr", self.actor_lr), ("critic_lr", self.critic_lr), ("grad_clip", self.grad_clip)] {
            if !(v.is_finite() && v > 0.0) {
                return bad(key, "must be positive");
            }
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return bad("gamma", "must lie in (0, 1]");
        }
        if !(self.target_tau > 0.0 && self.target_tau <= 1.0) {
            return bad("target_tau", "must lie in (0, 1]");
        }
        if !(self.entropy_coef.is_finite() && self.entropy_coef >= 0.0) {
            return bad("entropy_coef", "must be non-negative");
        }
        if self.batch_size > self.replay_capacity {
            return bad("batch_size", "exceeds replay_capacity");
        }
        Ok(())
    }

    pub fn learner_config(&self) -> LearnerConfig {
        LearnerConfig {
            algorithm: self.algorithm,
            hidden: self.hidden_units,
            gamma: self.gamma,
            actor_lr: self.actor_lr,
            critic_lr: self.critic_lr,
            tau: self.target_tau,
            target_update_freq: self.target_update_freq,
            behaviour_update_freq: self.behaviour_update_freq,
            entropy_coef: self.entropy_coef,
            batch_size: self.batch_size,
            sample_size: self.sample_size,
            replay_capacity: self.replay_capacity,
            grad_clip: self.grad_clip,
        }
    }

    /// Canonical `key=value` text; parsing it back yields the same config.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let (env, difficulty) = match self.environment {
            EnvKind::Traffic(d) => ("traffic".to_string(), Some(d)),
            other => (other.to_string(), None),
        };
        let _ = writeln!(s, "algorithm={}", self.algorithm);
        let _ = writeln!(s, "environment={env}");
        if let Some(d) = difficulty {
            let _ = writeln!(s, "difficulty={d}");
        }
        let rows: [(&str, String); 16] = [
            ("sample_size", self.sample_size.to_string()),
            ("hidden_units", self.hidden_units.to_string()),
            ("episodes", self.episodes.to_string()),
            ("episode_length", self.episode_length.to_string()),
            ("gamma", self.gamma.to_string()),
            ("behaviour_update_freq", self.behaviour_update_freq.to_string()),
            ("target_update_freq", self.target_update_freq.to_string()),
            ("actor_lr", self.actor_lr.to_string()),
            ("critic_lr", self.critic_lr.to_string()),
            ("target_tau", self.target_tau.to_string()),
            ("entropy_coef", self.entropy_coef.to_string()),
            ("batch_size", self.batch_size.to_string()),
            ("seed", self.seed.to_string()),
            ("replay_capacity", self.replay_capacity.to_string()),
            ("grad_clip", self.grad_clip.to_string()),
            ("checkpoint_every", self.checkpoint_every.to_string()),
        ];
        for (k, v) in rows {
            let _ = writeln!(s, "{k}={v}");
        }
        s
    }

    /// First 16 hex digits of the SHA-256 of [`TrainConfig::to_text`].
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_text().as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

/// `key=value` lines; blank lines and `#` comments are skipped.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| HarnessError::Config(format!("line {}: expected key=value, got `{line}`", n + 1)))?;
        let k = k.trim();
        if !KEYS.contains(&k) {
            return Err(HarnessError::UnknownKey(k.into()));
        }
        out.push((k.to_string(), v.trim().to_string()));
    }
    Ok(out)
}

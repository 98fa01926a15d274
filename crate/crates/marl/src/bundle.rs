//! Checkpoint bundles: a directory holding `manifest.txt` (flat
//! `key=value` lines) plus one nn-format blob per actor and critic.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use nn::Mlp;

use crate::{Algorithm, Learner, MarlError, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Manifest {
    pub algorithm: Algorithm,
    pub environment: String,
    pub config_hash: String,
    pub episodes: usize,
    pub actors: usize,
    pub critics: usize,
}

impl Manifest {
    pub fn to_text(&self) -> String {
        format!(
            "algorithm={}\nenvironment={}\nconfig_hash={}\nepisodes={}\nactors={}\ncritics={}\n",
            self.algorithm, self.environment, self.config_hash, self.episodes, self.actors, self.critics
        )
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut kv = BTreeMap::new();
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| MarlError::Bundle(format!("manifest line without '=': {line}")))?;
            kv.insert(k.trim(), v.trim());
        }
        let get = |k: &str| kv.get(k).copied().ok_or_else(|| MarlError::Bundle(format!("manifest lacks {k}")));
        let count = |k: &str| -> Result<usize> {
            get(k)?.parse().map_err(|_| MarlError::Bundle(format!("manifest {k} is not a count")))
        };
        Ok(Self {
            algorithm: get("algorithm")?.parse()?,
            environment: get("environment")?.to_string(),
            config_hash: get("config_hash")?.to_string(),
            episodes: count("episodes")?,
            actors: count("actors")?,
            critics: count("critics")?,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bundle {
    pub manifest: Manifest,
    pub actors: Vec<Mlp>,
    pub critics: Vec<Mlp>,
}

impl Bundle {
    pub fn capture(learner: &dyn Learner, environment: &str, config_hash: &str, episodes: usize) -> Self {
        let actors: Vec<Mlp> = learner.actors().into_iter().cloned().collect();
        let critics: Vec<Mlp> = learner.critics().into_iter().cloned().collect();
        Self {
            manifest: Manifest {
                algorithm: learner.algorithm(),
                environment: environment.to_string(),
                config_hash: config_hash.to_string(),
                episodes,
                actors: actors.len(),
                critics: critics.len(),
            },
            actors,
            critics,
        }
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        for (i, a) in self.actors.iter().enumerate() {
            fs::write(dir.join(format!("actor_{i}.bin")), a.to_bytes())?;
        }
        for (i, c) in self.critics.iter().enumerate() {
            fs::write(dir.join(format!("critic_{i}.bin")), c.to_bytes())?;
        }
        fs::write(dir.join("manifest.txt"), self.manifest.to_text())?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let manifest = Manifest::parse(&fs::read_to_string(dir.join("manifest.txt"))?)?;
        let read = |name: String| -> Result<Mlp> { Ok(Mlp::from_bytes(&fs::read(dir.join(name))?)?) };
        let actors = (0..manifest.actors)
            .map(|i| read(format!("actor_{i}.bin")))
            .collect::<Result<Vec<_>>>()?;
        let critics = (0..manifest.critics)
            .map(|i| read(format!("critic_{i}.bin")))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            manifest,
            actors,
            critics,
        })
    }

    /// Loads the networks into `learner` after checking the algorithm and
    /// environment match.
    pub fn install(&self, learner: &mut dyn Learner, environment: &str) -> Result<()> {
        if self.manifest.algorithm != learner.algorithm() {
            return Err(MarlError::Bundle(format!(
                "bundle holds {} networks, learner is {}",
                self.manifest.algorithm,
                learner.algorithm()
            )));
        }
        if self.manifest.environment != environment {
            return Err(MarlError::Bundle(format!(
                "bundle trained on {}, not {environment}",
                self.manifest.environment
            )));
        }
        learner.restore(self.actors.clone(), self.critics.clone())
    }
}

//! Multi-agent benchmark environments sharing one global reward.
//!
//! Every environment exposes a fixed number of agent slots, a per-agent
//! observation vector and a global state that is the concatenation of the
//! observations. Randomness is always supplied by the caller, so a seeded
//! generator and an action sequence fully determine a trajectory.

mod coopnav;
mod error;
mod particle;
mod prey;
pub mod traffic;
mod trajectory;

use std::fmt;
use std::str::FromStr;

use rand::RngCore;

pub use coopnav::CooperativeNavigation;
pub use error::EnvError;
pub use particle::{Move, ParticleWorld, Vec2, DAMPING, DT, FORCE, MAX_SPEED, RADIUS, SPAWN_SPAN};
pub use prey::PreyPredator;
pub use traffic::{Difficulty, TrafficJunction};
pub use trajectory::TrajectoryWriter;

pub type Result<T> = std::result::Result<T, EnvError>;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StepInfo {
    pub collisions: usize,
    /// No collision so far in this episode.
    pub success: bool,
    pub captured: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvStep {
    pub observations: Vec<Vec<f64>>,
    pub global_state: Vec<f64>,
    pub reward: f64,
    /// Terminal state reached (capture). Hitting the episode limit is
    /// reported through `truncated` instead.
    pub done: bool,
    pub truncated: bool,
    /// Which slots hold a live agent; always all-true for particle worlds.
    pub active: Vec<bool>,
    pub info: StepInfo,
}

impl EnvStep {
    pub(crate) fn assemble(observations: Vec<Vec<f64>>, active: Vec<bool>) -> Self {
        let global_state = observations.concat();
        Self {
            observations,
            global_state,
            reward: 0.0,
            done: false,
            truncated: false,
            active,
            info: StepInfo {
                success: true,
                ..StepInfo::default()
            },
        }
    }

    pub fn finished(&self) -> bool {
        self.done || self.truncated
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnvSpec {
    pub n_agents: usize,
    pub obs_dim: usize,
    pub n_actions: usize,
    pub episode_limit: usize,
}

impl EnvSpec {
    pub fn state_dim(&self) -> usize {
        self.n_agents * self.obs_dim
    }
}

pub trait Environment {
    fn spec(&self) -> EnvSpec;
    fn reset(&mut self, rng: &mut dyn RngCore) -> EnvStep;
    /// One action index per agent slot.
    fn step(&mut self, actions: &[usize], rng: &mut dyn RngCore) -> Result<EnvStep>;
}

pub(crate) fn check_actions(actions: &[usize], n_agents: usize, n_actions: usize) -> Result<()> {
    if actions.len() != n_agents {
        return Err(EnvError::Arity {
            expected: n_agents,
            got: actions.len(),
        });
    }
    if let Some((agent, &action)) = actions.iter().enumerate().find(|(_, &a)| a >= n_actions) {
        return Err(EnvError::ActionOutOfRange {
            agent,
            action,
            n_actions,
        });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EnvKind {
    CoopNav,
    Prey,
    Traffic(Difficulty),
}

impl EnvKind {
    /// `difficulty` is required for traffic and rejected elsewhere.
    pub fn from_name(name: &str, difficulty: Option<&str>) -> Result<Self> {
        match (name, difficulty) {
            ("coopnav", None) => Ok(Self::CoopNav),
            ("prey", None) => Ok(Self::Prey),
            ("traffic", Some(d)) => Ok(Self::Traffic(d.parse()?)),
            ("traffic", None) => Err(EnvError::UnknownDifficulty("<missing>".into())),
            ("coopnav" | "prey", Some(d)) => Err(EnvError::UnknownDifficulty(format!("{d} (for {name})"))),
            _ => Err(EnvError::UnknownEnv(name.into())),
        }
    }

    pub fn spec(self) -> EnvSpec {
        match self {
            Self::CoopNav => coopnav::SPEC,
            Self::Prey => prey::SPEC,
            Self::Traffic(d) => traffic::spec(d),
        }
    }

    pub fn build(self) -> Box<dyn Environment + Send> {
        match self {
            Self::CoopNav => Box::new(CooperativeNavigation::new()),
            Self::Prey => Box::new(PreyPredator::new()),
            Self::Traffic(d) => Box::new(TrafficJunction::new(d)),
        }
    }
}

impl fmt::Display for EnvKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::CoopNav => f.write_str("coopnav"),
            Self::Prey => f.write_str("prey"),
            Self::Traffic(d) => write!(f, "traffic-{d}"),
        }
    }
}

/// Accepts `coopnav`, `prey` and `traffic-{easy,medium,hard}`.
impl FromStr for EnvKind {
    type Err = EnvError;

    fn from_str(s: &str) -> Result<Self> {
        match s.split_once('-') {
            Some(("traffic", d)) => Self::from_name("traffic", Some(d)),
            _ => Self::from_name(s, None),
        }
    }
}

/// Static dimensions for an environment by name.
pub fn env_spec(name: &str, difficulty: Option<&str>) -> Result<EnvSpec> {
    EnvKind::from_name(name, difficulty).map(EnvKind::spec)
}

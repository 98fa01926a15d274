use rand::RngCore;

use crate::particle::push;
use crate::{check_actions, EnvError, EnvSpec, EnvStep, Environment, Move, ParticleWorld, Result, Vec2};

pub const AGENTS: usize = 3;
pub const LANDMARKS: usize = 3;
/// Own position and velocity, landmark displacements, other-agent displacements.
pub const OBS_DIM: usize = 4 + 2 * LANDMARKS + 2 * (AGENTS - 1);

pub(crate) const SPEC: EnvSpec = EnvSpec {
    n_agents: AGENTS,
    obs_dim: OBS_DIM,
    n_actions: Move::COUNT,
    episode_limit: 200,
};

/// Three agents should cover three landmarks without bumping into each other.
#[derive(Debug, Clone)]
pub struct CooperativeNavigation {
    world: ParticleWorld,
    landmarks: Vec<Vec2>,
    t: usize,
    collided: bool,
    over: bool,
}

impl Default for CooperativeNavigation {
    fn default() -> Self {
        Self::new()
    }
}

impl CooperativeNavigation {
    pub fn new() -> Self {
        Self {
            world: ParticleWorld::new(vec![Vec2::ZERO; AGENTS]),
            landmarks: vec![Vec2::ZERO; LANDMARKS],
            t: 0,
            collided: false,
            over: false,
        }
    }

    /// Places agents (at rest) and landmarks explicitly, as after a reset.
    pub fn with_layout(agents: [Vec2; AGENTS], landmarks: [Vec2; LANDMARKS]) -> Self {
        Self {
            world: ParticleWorld::new(agents.to_vec()),
            landmarks: landmarks.to_vec(),
            ..Self::new()
        }
    }

    pub fn world(&self) -> &ParticleWorld {
        &self.world
    }

    pub fn landmarks(&self) -> &[Vec2] {
        &self.landmarks
    }

    /// `−Σ_landmarks min_agent dist − collisions` for the current layout.
    pub fn reward(&self) -> f64 {
        let cover: f64 = self
            .landmarks
            .iter()
            .map(|l| self.world.pos.iter().map(|p| p.dist(*l)).fold(f64::INFINITY, f64::min))
            .sum();
        -cover - self.world.collisions() as f64
    }

    fn observe(&self) -> EnvStep {
        let obs = (0..AGENTS)
            .map(|i| {
                let me = self.world.pos[i];
                let mut o = Vec::with_capacity(OBS_DIM);
                push(&mut o, me);
                push(&mut o, self.world.vel[i]);
                for l in &self.landmarks {
                    push(&mut o, l.sub(me));
                }
                for j in (0..AGENTS).filter(|&j| j != i) {
                    push(&mut o, self.world.pos[j].sub(me));
                }
                o
            })
            .collect();
        EnvStep::assemble(obs, vec![true; AGENTS])
    }
}

impl Environment for CooperativeNavigation {
    fn spec(&self) -> EnvSpec {
        SPEC
    }

    fn reset(&mut self, rng: &mut dyn RngCore) -> EnvStep {
        let agents = (0..AGENTS).map(|_| Vec2::random(rng)).collect();
        self.world = ParticleWorld::new(agents);
        self.landmarks = (0..LANDMARKS).map(|_| Vec2::random(rng)).collect();
        self.t = 0;
        self.collided = false;
        self.over = false;
        self.observe()
    }

    fn step(&mut self, actions: &[usize], _rng: &mut dyn RngCore) -> Result<EnvStep> {
        if self.over {
            return Err(EnvError::EpisodeOver);
        }
        check_actions(actions, AGENTS, Move::COUNT)?;
        let moves: Vec<Move> = actions.iter().map(|&a| Move::from_index(a).expect("checked")).collect();
        self.world.integrate(&moves);
        self.t += 1;
        let collisions = self.world.collisions();
        self.collided |= collisions > 0;
        let mut step = self.observe();
        step.reward = self.reward();
        step.truncated = self.t >= SPEC.episode_limit;
        self.over = step.truncated;
        step.info.collisions = collisions;
        step.info.success = !self.collided;
        Ok(step)
    }
}

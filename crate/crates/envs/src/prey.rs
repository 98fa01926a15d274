use rand::{Rng, RngCore};

use crate::particle::push;
use crate::{check_actions, EnvError, EnvSpec, EnvStep, Environment, Move, ParticleWorld, Result, Vec2, RADIUS};

pub const PREDATORS: usize = 3;
/// Own position and velocity, prey displacement and velocity, other predators.
pub const OBS_DIM: usize = 4 + 4 + 2 * (PREDATORS - 1);
pub const CAPTURE_BONUS: f64 = 10.0;
/// Capture when centres are closer than predator radius + prey radius.
pub const CAPTURE_DISTANCE: f64 = 2.0 * RADIUS;

pub(crate) const SPEC: EnvSpec = EnvSpec {
    n_agents: PREDATORS,
    obs_dim: OBS_DIM,
    n_actions: Move::COUNT,
    episode_limit: 200,
};

/// Three predators chase one uniformly random prey. Entity `PREDATORS` in
/// the world is the prey.
#[derive(Debug, Clone)]
pub struct PreyPredator {
    world: ParticleWorld,
    t: usize,
    over: bool,
}

impl Default for PreyPredator {
    fn default() -> Self {
        Self::new()
    }
}

impl PreyPredator {
    pub fn new() -> Self {
        Self {
            world: ParticleWorld::new(vec![Vec2::ZERO; PREDATORS + 1]),
            t: 0,
            over: false,
        }
    }

    pub fn with_layout(predators: [Vec2; PREDATORS], prey: Vec2) -> Self {
        let mut pos = predators.to_vec();
        pos.push(prey);
        Self {
            world: ParticleWorld::new(pos),
            t: 0,
            over: false,
        }
    }

    pub fn world(&self) -> &ParticleWorld {
        &self.world
    }

    pub fn prey(&self) -> Vec2 {
        self.world.pos[PREDATORS]
    }

    pub fn predator_distances(&self) -> Vec<f64> {
        (0..PREDATORS).map(|i| self.world.pos[i].dist(self.prey())).collect()
    }

    pub fn captured(&self) -> bool {
        self.predator_distances().iter().any(|&d| d < CAPTURE_DISTANCE)
    }

    /// `−min_i dist(predator_i, prey)`, plus the bonus on capture.
    pub fn reward(&self) -> f64 {
        let nearest = self.predator_distances().into_iter().fold(f64::INFINITY, f64::min);
        -nearest + if self.captured() { CAPTURE_BONUS } else { 0.0 }
    }

    pub fn observe(&self) -> EnvStep {
        let prey = self.prey();
        let obs = (0..PREDATORS)
            .map(|i| {
                let me = self.world.pos[i];
                let mut o = Vec::with_capacity(OBS_DIM);
                push(&mut o, me);
                push(&mut o, self.world.vel[i]);
                push(&mut o, prey.sub(me));
                push(&mut o, self.world.vel[PREDATORS]);
                for j in (0..PREDATORS).filter(|&j| j != i) {
                    push(&mut o, self.world.pos[j].sub(me));
                }
                o
            })
            .collect();
        EnvStep::assemble(obs, vec![true; PREDATORS])
    }
}

impl Environment for PreyPredator {
    fn spec(&self) -> EnvSpec {
        SPEC
    }

    fn reset(&mut self, rng: &mut dyn RngCore) -> EnvStep {
        self.world = ParticleWorld::new((0..=PREDATORS).map(|_| Vec2::random(rng)).collect());
        self.t = 0;
        self.over = false;
        self.observe()
    }

    fn step(&mut self, actions: &[usize], rng: &mut dyn RngCore) -> Result<EnvStep> {
        if self.over {
            return Err(EnvError::EpisodeOver);
        }
        check_actions(actions, PREDATORS, Move::COUNT)?;
        let mut moves: Vec<Move> = actions.iter().map(|&a| Move::from_index(a).expect("checked")).collect();
        moves.push(Move::from_index(rng.random_range(0..Move::COUNT)).expect("in range"));
        self.world.integrate(&moves);
        self.t += 1;
        let captured = self.captured();
        let mut step = self.observe();
        step.reward = self.reward();
        step.done = captured;
        step.truncated = !captured && self.t >= SPEC.episode_limit;
        self.over = step.finished();
        step.info.captured = captured;
        Ok(step)
    }
}

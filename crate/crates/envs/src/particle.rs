use rand::{Rng, RngCore};

pub const DT: f64 = 0.1;
pub const DAMPING: f64 = 0.25;
pub const RADIUS: f64 = 0.1;
pub const FORCE: f64 = 1.0;
pub const MAX_SPEED: f64 = 1.0;
/// Entities spawn uniformly in `[-SPAWN_SPAN, SPAWN_SPAN]²`.
pub const SPAWN_SPAN: f64 = 1.0;

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }

    pub fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }

    pub fn scale(self, k: f64) -> Vec2 {
        Vec2::new(self.x * k, self.y * k)
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, o: Vec2) -> f64 {
        self.sub(o).norm()
    }

    pub(crate) fn random<R: RngCore + ?Sized>(rng: &mut R) -> Vec2 {
        Vec2::new(
            rng.random_range(-SPAWN_SPAN..=SPAWN_SPAN),
            rng.random_range(-SPAWN_SPAN..=SPAWN_SPAN),
        )
    }
}

/// The five discrete movement choices shared by the particle worlds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Move {
    Up,
    Down,
    Right,
    Left,
    Stay,
}

impl Move {
    pub const COUNT: usize = 5;

    pub fn from_index(i: usize) -> Option<Move> {
        [Move::Up, Move::Down, Move::Right, Move::Left, Move::Stay].get(i).copied()
    }

    pub fn force(self) -> Vec2 {
        match self {
            Move::Up => Vec2::new(0.0, FORCE),
            Move::Down => Vec2::new(0.0, -FORCE),
            Move::Right => Vec2::new(FORCE, 0.0),
            Move::Left => Vec2::new(-FORCE, 0.0),
            Move::Stay => Vec2::ZERO,
        }
    }
}

/// Point-mass bodies with unit mass, linear damping and a speed cap.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleWorld {
    pub pos: Vec<Vec2>,
    pub vel: Vec<Vec2>,
}

impl ParticleWorld {
    pub fn new(pos: Vec<Vec2>) -> Self {
        let vel = vec![Vec2::ZERO; pos.len()];
        Self { pos, vel }
    }

    pub fn len(&self) -> usize {
        self.pos.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pos.is_empty()
    }

    /// `v ← (1−damping)·v + F·dt`, capped at `MAX_SPEED`, then `p ← p + v·dt`.
    pub fn integrate(&mut self, moves: &[Move]) {
        for ((p, v), m) in self.pos.iter_mut().zip(&mut self.vel).zip(moves) {
            let mut nv = v.scale(1.0 - DAMPING).add(m.force().scale(DT));
            let speed = nv.norm();
            if speed > MAX_SPEED {
                nv = nv.scale(MAX_SPEED / speed);
            }
            *v = nv;
            *p = p.add(nv.scale(DT));
        }
    }

    pub fn overlapping(&self, i: usize, j: usize) -> bool {
        self.pos[i].dist(self.pos[j]) < 2.0 * RADIUS
    }

    /// Overlapping unordered pairs.
    pub fn collisions(&self) -> usize {
        let n = self.len();
        (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .filter(|&(i, j)| self.overlapping(i, j))
            .count()
    }
}

pub(crate) fn push(out: &mut Vec<f64>, v: Vec2) {
    out.push(v.x);
    out.push(v.y);
}

//! Gridworld junctions where cars follow fixed routes and may only press gas
//! or brake.
//!
//! Roads are straight lanes spanning the whole grid. A one-way layout has a
//! single lane per road; two-way layouts pair a lane in each direction,
//! driving on the right. Routes start at a lane's entry cell, may turn onto
//! a crossing lane at a shared cell, and leave the grid at some lane's exit.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, RngCore};

use crate::{check_actions, EnvError, EnvSpec, EnvStep, Environment, Result};

pub const GAS: usize = 0;
pub const BRAKE: usize = 1;
pub const N_ACTIONS: usize = 2;
/// 3×3 neighbourhood occupancy, normalised row and column, route progress,
/// heading one-hot, active flag.
pub const OBS_DIM: usize = 9 + 2 + 1 + 4 + 1;
pub const STEP_PENALTY: f64 = 0.01;
pub const COLLISION_PENALTY: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Difficulty {
    Easy,
    Medium,
    Hard,
}

impl Difficulty {
    pub const ALL: [Difficulty; 3] = [Difficulty::Easy, Difficulty::Medium, Difficulty::Hard];

    pub fn settings(self) -> Settings {
        match self {
            Difficulty::Easy => Settings {
                p_arrive: 0.3,
                n_max: 5,
                entries: 2,
                routes_per_entry: 1,
                two_way: false,
                junctions: 1,
                dim: 7,
                episode_limit: 50,
                eval_steps: 20,
                max_turns: 0,
            },
            Difficulty::Medium => Settings {
                p_arrive: 0.2,
                n_max: 10,
                entries: 4,
                routes_per_entry: 3,
                two_way: true,
                junctions: 1,
                dim: 14,
                episode_limit: 50,
                eval_steps: 40,
                max_turns: 1,
            },
            Difficulty::Hard => Settings {
                p_arrive: 0.05,
                n_max: 20,
                entries: 8,
                routes_per_entry: 7,
                two_way: true,
                junctions: 4,
                dim: 18,
                episode_limit: 100,
                eval_steps: 60,
                max_turns: 2,
            },
        }
    }
}

impl fmt::Display for Difficulty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Difficulty::Easy => "easy",
            Difficulty::Medium => "medium",
            Difficulty::Hard => "hard",
        })
    }
}

impl FromStr for Difficulty {
    type Err = EnvError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "easy" => Ok(Difficulty::Easy),
            "medium" => Ok(Difficulty::Medium),
            "hard" => Ok(Difficulty::Hard),
            other => Err(EnvError::UnknownDifficulty(other.into())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Settings {
    pub p_arrive: f64,
    pub n_max: usize,
    pub entries: usize,
    pub routes_per_entry: usize,
    pub two_way: bool,
    pub junctions: usize,
    pub dim: usize,
    pub episode_limit: usize,
    /// Steps per episode when measuring success rate.
    pub eval_steps: usize,
    /// Most turns a route may take.
    pub max_turns: usize,
}

pub(crate) fn spec(d: Difficulty) -> EnvSpec {
    let s = d.settings();
    EnvSpec {
        n_agents: s.n_max,
        obs_dim: OBS_DIM,
        n_actions: N_ACTIONS,
        episode_limit: s.episode_limit,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Heading {
    North,
    South,
    East,
    West,
}

impl Heading {
    fn index(self) -> usize {
        self as usize
    }

    fn vertical(self) -> bool {
        matches!(self, Heading::North | Heading::South)
    }
}

pub type Cell = (usize, usize);

/// A full-length straight lane: a column for vertical headings, a row for
/// horizontal ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Lane {
    pub heading: Heading,
    pub line: usize,
}

impl Lane {
    fn cells(self, dim: usize) -> Vec<Cell> {
        let l = self.line;
        match self.heading {
            Heading::South => (0..dim).map(|r| (r, l)).collect(),
            Heading::North => (0..dim).rev().map(|r| (r, l)).collect(),
            Heading::East => (0..dim).map(|c| (l, c)).collect(),
            Heading::West => (0..dim).rev().map(|c| (l, c)).collect(),
        }
    }

    fn contains(self, cell: Cell) -> bool {
        if self.heading.vertical() {
            cell.1 == self.line
        } else {
            cell.0 == self.line
        }
    }

    fn entry(self, dim: usize) -> Cell {
        self.cells(dim)[0]
    }
}

/// Lanes per difficulty. Two-way roads put southbound traffic in the left
/// column and westbound traffic in the upper row.
pub fn lanes(d: Difficulty) -> Vec<Lane> {
    let lane = |heading, line| Lane { heading, line };
    match d {
        Difficulty::Easy => vec![lane(Heading::East, 3), lane(Heading::South, 3)],
        Difficulty::Medium => vec![
            lane(Heading::South, 6),
            lane(Heading::North, 7),
            lane(Heading::East, 7),
            lane(Heading::West, 6),
        ],
        Difficulty::Hard => vec![
            lane(Heading::South, 5),
            lane(Heading::North, 6),
            lane(Heading::South, 11),
            lane(Heading::North, 12),
            lane(Heading::East, 6),
            lane(Heading::West, 5),
            lane(Heading::East, 12),
            lane(Heading::West, 11),
        ],
    }
}

/// Cells in driving order with the heading taken when leaving each cell.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Route {
    pub entry: usize,
    pub exit: usize,
    pub turns: usize,
    pub path: Vec<(Cell, Heading)>,
}

impl Route {
    pub fn len(&self) -> usize {
        self.path.len()
    }

    pub fn is_empty(&self) -> bool {
        self.path.is_empty()
    }

    pub fn cell(&self, index: usize) -> Cell {
        self.path[index].0
    }
}

fn opposite_lane(lanes: &[Lane], i: usize) -> Option<usize> {
    // the paired lane of a two-way road runs the other way on the adjacent line
    let me = lanes[i];
    lanes.iter().position(|l| {
        l.heading.vertical() == me.heading.vertical()
            && l.heading != me.heading
            && l.line.abs_diff(me.line) == 1
    })
}

fn extend_routes(
    lanes: &[Lane],
    dim: usize,
    lane: usize,
    from: usize,
    turns_left: usize,
    prefix: &mut Vec<(Cell, Heading)>,
    out: &mut Vec<(usize, Vec<(Cell, Heading)>)>,
) {
    let cells = lanes[lane].cells(dim);
    let heading = lanes[lane].heading;
    let base = prefix.len();
    for (k, &cell) in cells.iter().enumerate().skip(from) {
        if prefix.iter().any(|&(c, _)| c == cell) {
            prefix.truncate(base);
            return;
        }
        if turns_left > 0 {
            for (j, other) in lanes.iter().enumerate() {
                if other.heading.vertical() != heading.vertical() && other.contains(cell) {
                    let next = other.cells(dim).iter().position(|&c| c == cell).expect("crossing") + 1;
                    if next < dim {
                        prefix.push((cell, other.heading));
                        extend_routes(lanes, dim, j, next, turns_left - 1, prefix, out);
                        prefix.pop();
                    }
                }
            }
        }
        prefix.push((cell, heading));
        if k + 1 == cells.len() {
            out.push((lane, prefix.clone()));
        }
    }
    prefix.truncate(base);
}

/// For each exit other than the same road's opposite lane, the path with
/// fewest turns then fewest cells (earliest turn on ties). Routes are
/// ordered by turns then exit and the first `routes_per_entry` are kept.
pub fn routes(d: Difficulty) -> Vec<Vec<Route>> {
    let s = d.settings();
    let lanes = lanes(d);
    (0..lanes.len())
        .map(|entry| {
            let mut found = Vec::new();
            extend_routes(&lanes, s.dim, entry, 0, s.max_turns, &mut Vec::new(), &mut found);
            let banned = opposite_lane(&lanes, entry);
            let mut best: BTreeMap<usize, Route> = BTreeMap::new();
            for (exit, path) in found {
                if Some(exit) == banned {
                    continue;
                }
                let turns = path.windows(2).filter(|w| w[0].1 != w[1].1).count();
                let cand = Route { entry, exit, turns, path };
                let better = best
                    .get(&exit)
                    .is_none_or(|b| (cand.turns, cand.len()) < (b.turns, b.len()));
                if better {
                    best.insert(exit, cand);
                }
            }
            let mut rs: Vec<Route> = best.into_values().collect();
            rs.sort_by_key(|r| (r.turns, r.exit));
            rs.truncate(s.routes_per_entry);
            rs
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Car {
    pub entry: usize,
    pub route: usize,
    pub index: usize,
    /// Steps this car has been continuously active.
    pub age: usize,
}

#[derive(Debug, Clone)]
pub struct TrafficJunction {
    difficulty: Difficulty,
    settings: Settings,
    lanes: Vec<Lane>,
    routes: Vec<Vec<Route>>,
    slots: Vec<Option<Car>>,
    t: usize,
    collided: bool,
    over: bool,
}

impl TrafficJunction {
    pub fn new(difficulty: Difficulty) -> Self {
        let settings = difficulty.settings();
        Self {
            difficulty,
            settings,
            lanes: lanes(difficulty),
            routes: routes(difficulty),
            slots: vec![None; settings.n_max],
            t: 0,
            collided: false,
            over: false,
        }
    }

    /// Same layout with a different arrival probability.
    pub fn with_arrival_rate(difficulty: Difficulty, p_arrive: f64) -> Self {
        let mut env = Self::new(difficulty);
        env.settings.p_arrive = p_arrive;
        env
    }

    pub fn difficulty(&self) -> Difficulty {
        self.difficulty
    }

    pub fn settings(&self) -> Settings {
        self.settings
    }

    pub fn lanes(&self) -> &[Lane] {
        &self.lanes
    }

    pub fn routes(&self) -> &[Vec<Route>] {
        &self.routes
    }

    pub fn cars(&self) -> &[Option<Car>] {
        &self.slots
    }

    pub fn active_count(&self) -> usize {
        self.slots.iter().flatten().count()
    }

    fn route_of(&self, car: &Car) -> &Route {
        &self.routes[car.entry][car.route]
    }

    pub fn car_cell(&self, car: &Car) -> Cell {
        self.route_of(car).cell(car.index)
    }

    /// Puts a car in `slot` at `index` along a route, replacing any occupant.
    pub fn place_car(&mut self, slot: usize, entry: usize, route: usize, index: usize) {
        assert!(index < self.routes[entry][route].len(), "index past route end");
        self.slots[slot] = Some(Car { entry, route, index, age: 0 });
    }

    fn occupied(&self, cell: Cell) -> bool {
        self.slots.iter().flatten().any(|c| self.car_cell(c) == cell)
    }

    /// At most one arrival per step: with probability `p_arrive` a car
    /// appears at a uniformly chosen entry on a uniformly chosen route, unless
    /// every slot is taken or that entry cell is occupied.
    fn spawn(&mut self, rng: &mut dyn RngCore) {
        if rng.random::<f64>() >= self.settings.p_arrive {
            return;
        }
        let entry = rng.random_range(0..self.lanes.len());
        let route = rng.random_range(0..self.routes[entry].len());
        let Some(slot) = self.slots.iter().position(Option::is_none) else {
            return;
        };
        if self.occupied(self.lanes[entry].entry(self.settings.dim)) {
            return;
        }
        self.slots[slot] = Some(Car { entry, route, index: 0, age: 0 });
    }

    /// Cells holding two or more cars.
    pub fn collisions(&self) -> usize {
        let mut counts: BTreeMap<Cell, usize> = BTreeMap::new();
        for c in self.slots.iter().flatten() {
            *counts.entry(self.car_cell(c)).or_default() += 1;
        }
        counts.values().filter(|&&k| k > 1).count()
    }

    fn observe(&self) -> EnvStep {
        let dim = self.settings.dim;
        let scale = (dim - 1) as f64;
        let mut grid = vec![0usize; dim * dim];
        for c in self.slots.iter().flatten() {
            let (r, col) = self.car_cell(c);
            grid[r * dim + col] += 1;
        }
        let obs = self
            .slots
            .iter()
            .map(|slot| {
                let mut o = vec![0.0; OBS_DIM];
                let Some(car) = slot else { return o };
                let route = self.route_of(car);
                let (cell, heading) = route.path[car.index];
                let (r, c) = (cell.0 as isize, cell.1 as isize);
                let mut k = 0;
                for dr in -1..=1 {
                    for dc in -1..=1 {
                        let (rr, cc) = (r + dr, c + dc);
                        if (0..dim as isize).contains(&rr) && (0..dim as isize).contains(&cc) {
                            let mut n = grid[rr as usize * dim + cc as usize];
                            if dr == 0 && dc == 0 {
                                n -= 1;
                            }
                            o[k] = n.min(1) as f64;
                        }
                        k += 1;
                    }
                }
                o[9] = cell.0 as f64 / scale;
                o[10] = cell.1 as f64 / scale;
                o[11] = car.index as f64 / (route.len() - 1) as f64;
                o[12 + heading.index()] = 1.0;
                o[16] = 1.0;
                o
            })
            .collect();
        let active = self.slots.iter().map(Option::is_some).collect();
        EnvStep::assemble(obs, active)
    }
}

impl Environment for TrafficJunction {
    fn spec(&self) -> EnvSpec {
        spec(self.difficulty)
    }

    fn reset(&mut self, rng: &mut dyn RngCore) -> EnvStep {
        self.slots.iter_mut().for_each(|s| *s = None);
        self.t = 0;
        self.collided = false;
        self.over = false;
        self.spawn(rng);
        self.observe()
    }

    /// Gas advances one cell and a car driving off its final cell leaves.
    /// Ages grow, the reward is charged, then new cars may arrive.
    fn step(&mut self, actions: &[usize], rng: &mut dyn RngCore) -> Result<EnvStep> {
        if self.over {
            return Err(EnvError::EpisodeOver);
        }
        check_actions(actions, self.settings.n_max, N_ACTIONS)?;
        for s in 0..self.slots.len() {
            let Some(mut car) = self.slots[s] else { continue };
            if actions[s] == GAS {
                car.index += 1;
            }
            if car.index == self.route_of(&car).len() {
                self.slots[s] = None;
                continue;
            }
            car.age += 1;
            self.slots[s] = Some(car);
        }
        let collisions = self.collisions();
        self.collided |= collisions > 0;
        let ages: usize = self.slots.iter().flatten().map(|c| c.age).sum();
        let reward = -STEP_PENALTY * ages as f64 - COLLISION_PENALTY * collisions as f64;
        self.t += 1;
        self.spawn(rng);
        let mut step = self.observe();
        step.reward = reward;
        step.truncated = self.t >= self.settings.episode_limit;
        self.over = step.truncated;
        step.info.collisions = collisions;
        step.info.success = !self.collided;
        Ok(step)
    }
}

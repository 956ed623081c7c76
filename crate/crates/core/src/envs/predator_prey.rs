//! Predator & Prey grid world.
//!
//! Predators (the agents) roam a rectangular grid trying to capture randomly
//! moving prey. A prey captured by exactly two predators in the same step
//! pays the team +10 and removes the prey and both predators; a lone captor
//! pays -2 and the prey survives. Optional hares are deceptive +1 targets a
//! single predator can take. Movement is stochastic: an "up" action slips to
//! "stay" with probability `slip_prob`, and each agent sees only the cells
//! within `obs_radius` of itself, so the task is a POMDP that rewards
//! coordinated optimism.
//!
//! Step resolution is pinned for reproducibility:
//! 1. predators move in agent-index order (up-slip drawn per attempt;
//!    off-grid or occupied targets resolve to stay),
//! 2. surviving prey each move uniformly among {stay + legal moves},
//! 3. captures resolve: every capturing predator targets the adjacent live
//!    prey with the lowest cell index; groups of exactly two pair-capture,
//!    a third or later captor takes the solo penalty; predators with no
//!    adjacent prey take an adjacent hare if one exists,
//! 4. the team reward is the sum of all capture rewards this step.
//!
//! Eliminated predators keep emitting their frozen final observation and
//! their actions are ignored, so the joint-action arity never changes.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use super::{
    encode_observation, mix_seed, Cell, EnvError, Environment, ObservationKey, StepInfo,
    StepResult,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    Up,
    Down,
    Left,
    Right,
    Stay,
    Capture,
}

impl Action {
    pub const COUNT: usize = 6;

    pub fn from_index(i: usize) -> Option<Action> {
        match i {
            0 => Some(Action::Up),
            1 => Some(Action::Down),
            2 => Some(Action::Left),
            3 => Some(Action::Right),
            4 => Some(Action::Stay),
            5 => Some(Action::Capture),
            _ => None,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Action::Up => 0,
            Action::Down => 1,
            Action::Left => 2,
            Action::Right => 3,
            Action::Stay => 4,
            Action::Capture => 5,
        }
    }

    fn delta(self) -> Option<(i64, i64)> {
        match self {
            Action::Up => Some((0, -1)),
            Action::Down => Some((0, 1)),
            Action::Left => Some((-1, 0)),
            Action::Right => Some((1, 0)),
            Action::Stay | Action::Capture => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PredatorPreyConfig {
    pub width: usize,
    pub height: usize,
    pub n_predators: usize,
    pub n_prey: usize,
    pub n_hares: usize,
    pub pair_capture_reward: f64,
    pub solo_capture_penalty: f64,
    pub hare_reward: f64,
    /// Probability that an "up" action is not executed.
    pub slip_prob: f64,
    pub obs_radius: usize,
    pub max_steps: usize,
    /// Whether a lone captor removes the prey (off by default: the prey
    /// survives a solo capture).
    pub solo_removes_prey: bool,
    /// When set, hare captures resolve simultaneously like prey and a pair
    /// of captors earns `2·hare_reward`; otherwise hares are taken one
    /// predator at a time.
    pub pair_capture_hares: bool,
    /// Salt mixed into every episode seed.
    pub seed: u64,
}

impl Default for PredatorPreyConfig {
    fn default() -> Self {
        Self {
            width: 10,
            height: 10,
            n_predators: 8,
            n_prey: 8,
            n_hares: 0,
            pair_capture_reward: 10.0,
            solo_capture_penalty: -2.0,
            hare_reward: 1.0,
            slip_prob: 0.1,
            obs_radius: 2,
            max_steps: 200,
            solo_removes_prey: false,
            pair_capture_hares: false,
            seed: 0,
        }
    }
}

impl PredatorPreyConfig {
    pub fn validate(&self) -> Result<(), EnvError> {
        let entities = self.n_predators + self.n_prey + self.n_hares;
        if entities > self.width * self.height {
            return Err(EnvError::GridTooSmall {
                width: self.width,
                height: self.height,
                entities,
            });
        }
        if !(0.0..=1.0).contains(&self.slip_prob) {
            return Err(EnvError::BadConfig(format!(
                "slip_prob {} outside [0, 1]",
                self.slip_prob
            )));
        }
        if self.obs_radius < 1 {
            return Err(EnvError::BadConfig("obs_radius must be >= 1".into()));
        }
        if self.n_predators == 0 {
            return Err(EnvError::BadConfig("need at least one predator".into()));
        }
        if self.max_steps == 0 {
            return Err(EnvError::BadConfig("max_steps must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Occupant {
    None,
    Predator(usize),
    Prey(usize),
    Hare(usize),
}

#[derive(Debug, Clone, Copy)]
struct Entity {
    x: usize,
    y: usize,
    alive: bool,
}

#[derive(Debug, Clone)]
pub struct PredatorPrey {
    cfg: PredatorPreyConfig,
    predators: Vec<Entity>,
    prey: Vec<Entity>,
    hares: Vec<Entity>,
    grid: Vec<Occupant>,
    step_count: usize,
    done: bool,
    rng: ChaCha12Rng,
    rng_draws: u64,
    frozen_obs: Vec<Option<ObservationKey>>,
}

impl PredatorPrey {
    pub fn new(cfg: PredatorPreyConfig) -> Result<Self, EnvError> {
        cfg.validate()?;
        let n = cfg.n_predators;
        Ok(Self {
            predators: Vec::new(),
            prey: Vec::new(),
            hares: Vec::new(),
            grid: vec![Occupant::None; cfg.width * cfg.height],
            step_count: 0,
            done: true,
            rng: ChaCha12Rng::seed_from_u64(cfg.seed),
            rng_draws: 0,
            frozen_obs: vec![None; n],
            cfg,
        })
    }

    /// Places entities at explicit cells; used to set up exact scenarios.
    /// Positions must be distinct and in bounds.
    pub fn with_positions(
        cfg: PredatorPreyConfig,
        predators: &[(usize, usize)],
        prey: &[(usize, usize)],
        hares: &[(usize, usize)],
    ) -> Result<Self, EnvError> {
        let mut cfg = cfg;
        cfg.n_predators = predators.len();
        cfg.n_prey = prey.len();
        cfg.n_hares = hares.len();
        let mut env = Self::new(cfg)?;
        env.predators = predators
            .iter()
            .map(|&(x, y)| Entity { x, y, alive: true })
            .collect();
        env.prey = prey
            .iter()
            .map(|&(x, y)| Entity { x, y, alive: true })
            .collect();
        env.hares = hares
            .iter()
            .map(|&(x, y)| Entity { x, y, alive: true })
            .collect();
        env.rebuild_grid()?;
        env.done = false;
        env.step_count = 0;
        env.rng_draws = 0;
        Ok(env)
    }

    pub fn config(&self) -> &PredatorPreyConfig {
        &self.cfg
    }

    pub fn predators_alive(&self) -> usize {
        self.predators.iter().filter(|e| e.alive).count()
    }

    pub fn prey_alive(&self) -> usize {
        self.prey.iter().filter(|e| e.alive).count()
    }

    pub fn hares_alive(&self) -> usize {
        self.hares.iter().filter(|e| e.alive).count()
    }

    fn cell_index(&self, x: usize, y: usize) -> usize {
        y * self.cfg.width + x
    }

    fn rebuild_grid(&mut self) -> Result<(), EnvError> {
        self.grid.fill(Occupant::None);
        let (w, h) = (self.cfg.width, self.cfg.height);
        let place = |grid: &mut Vec<Occupant>, x: usize, y: usize, occ: Occupant| {
            if x >= w || y >= h {
                return Err(EnvError::BadConfig(format!("position ({x},{y}) out of bounds")));
            }
            let idx = y * w + x;
            if grid[idx] != Occupant::None {
                return Err(EnvError::BadConfig(format!("cell ({x},{y}) occupied twice")));
            }
            grid[idx] = occ;
            Ok(())
        };
        for (i, e) in self.predators.iter().enumerate() {
            if e.alive {
                place(&mut self.grid, e.x, e.y, Occupant::Predator(i))?;
            }
        }
        for (i, e) in self.prey.iter().enumerate() {
            if e.alive {
                place(&mut self.grid, e.x, e.y, Occupant::Prey(i))?;
            }
        }
        for (i, e) in self.hares.iter().enumerate() {
            if e.alive {
                place(&mut self.grid, e.x, e.y, Occupant::Hare(i))?;
            }
        }
        Ok(())
    }

    fn draw_unit(&mut self) -> f64 {
        self.rng_draws += 1;
        self.rng.random_range(0.0..1.0)
    }

    fn draw_range(&mut self, n: usize) -> usize {
        self.rng_draws += 1;
        self.rng.random_range(0..n)
    }

    fn move_entity(&mut self, from: (usize, usize), to: (usize, usize), occ: Occupant) {
        let fi = self.cell_index(from.0, from.1);
        let ti = self.cell_index(to.0, to.1);
        self.grid[fi] = Occupant::None;
        self.grid[ti] = occ;
    }

    fn in_bounds(&self, x: i64, y: i64) -> bool {
        x >= 0 && y >= 0 && (x as usize) < self.cfg.width && (y as usize) < self.cfg.height
    }

    fn is_free(&self, x: usize, y: usize) -> bool {
        self.grid[self.cell_index(x, y)] == Occupant::None
    }

    /// Live prey adjacent (4-neighborhood) to `(x, y)`, lowest cell index
    /// first.
    fn adjacent_prey(&self, x: usize, y: usize) -> Option<usize> {
        self.adjacent_of(x, y, |occ| match occ {
            Occupant::Prey(i) => Some(i),
            _ => None,
        })
    }

    fn adjacent_hare(&self, x: usize, y: usize) -> Option<usize> {
        self.adjacent_of(x, y, |occ| match occ {
            Occupant::Hare(i) => Some(i),
            _ => None,
        })
    }

    fn adjacent_of(
        &self,
        x: usize,
        y: usize,
        pick: impl Fn(Occupant) -> Option<usize>,
    ) -> Option<usize> {
        let mut best: Option<(usize, usize)> = None; // (cell index, entity index)
        for (dx, dy) in [(0i64, -1i64), (0, 1), (-1, 0), (1, 0)] {
            let (nx, ny) = (x as i64 + dx, y as i64 + dy);
            if !self.in_bounds(nx, ny) {
                continue;
            }
            let (nx, ny) = (nx as usize, ny as usize);
            let cell = self.cell_index(nx, ny);
            if let Some(entity) = pick(self.grid[cell]) {
                if best.is_none_or(|(c, _)| cell < c) {
                    best = Some((cell, entity));
                }
            }
        }
        best.map(|(_, e)| e)
    }

    fn window(&self, cx: usize, cy: usize) -> Vec<Cell> {
        let r = self.cfg.obs_radius as i64;
        let mut cells = Vec::with_capacity(((2 * r + 1) * (2 * r + 1)) as usize);
        for dy in -r..=r {
            for dx in -r..=r {
                let (x, y) = (cx as i64 + dx, cy as i64 + dy);
                let cell = if dx == 0 && dy == 0 {
                    Cell::Myself
                } else if !self.in_bounds(x, y) {
                    Cell::Wall
                } else {
                    match self.grid[self.cell_index(x as usize, y as usize)] {
                        Occupant::None => Cell::Empty,
                        Occupant::Predator(_) => Cell::Predator,
                        Occupant::Prey(_) => Cell::Prey,
                        Occupant::Hare(_) => Cell::Hare,
                    }
                };
                cells.push(cell);
            }
        }
        cells
    }

    /// Current per-agent observation keys (frozen for eliminated predators).
    pub fn observations(&self) -> Vec<ObservationKey> {
        self.predators
            .iter()
            .enumerate()
            .map(|(i, e)| {
                if e.alive {
                    encode_observation(&self.window(e.x, e.y))
                } else {
                    self.frozen_obs[i]
                        .clone()
                        .expect("dead predator has a frozen observation")
                }
            })
            .collect()
    }

    fn freeze_dead(&mut self, died: &[usize]) {
        for &i in died {
            let e = self.predators[i];
            self.frozen_obs[i] = Some(encode_observation(&self.window(e.x, e.y)));
        }
    }
}

impl Environment for PredatorPrey {
    fn n_agents(&self) -> usize {
        self.cfg.n_predators
    }

    fn n_actions(&self) -> usize {
        Action::COUNT
    }

    fn reset(&mut self, episode_seed: u64) -> Result<Vec<ObservationKey>, EnvError> {
        self.rng = ChaCha12Rng::seed_from_u64(mix_seed(self.cfg.seed, episode_seed));
        self.rng_draws = 0;
        self.step_count = 0;
        self.done = false;
        self.frozen_obs = vec![None; self.cfg.n_predators];

        // Distinct cells via partial Fisher-Yates over the full grid.
        let total = self.cfg.width * self.cfg.height;
        let need = self.cfg.n_predators + self.cfg.n_prey + self.cfg.n_hares;
        let mut cells: Vec<usize> = (0..total).collect();
        for j in 0..need {
            let pick = j + self.draw_range(total - j);
            cells.swap(j, pick);
        }
        let mut it = cells.into_iter();
        let mut take = |n: usize, w: usize| -> Vec<Entity> {
            (0..n)
                .map(|_| {
                    let c = it.next().unwrap();
                    Entity {
                        x: c % w,
                        y: c / w,
                        alive: true,
                    }
                })
                .collect()
        };
        let w = self.cfg.width;
        self.predators = take(self.cfg.n_predators, w);
        self.prey = take(self.cfg.n_prey, w);
        self.hares = take(self.cfg.n_hares, w);
        self.rebuild_grid()?;
        Ok(self.observations())
    }

    fn step(&mut self, actions: &[usize]) -> Result<StepResult, EnvError> {
        if self.done {
            return Err(EnvError::EpisodeDone);
        }
        if actions.len() != self.cfg.n_predators {
            return Err(EnvError::ActionArity {
                got: actions.len(),
                expected: self.cfg.n_predators,
            });
        }
        let actions: Vec<Action> = actions
            .iter()
            .map(|&a| Action::from_index(a).ok_or(EnvError::BadAction(a, Action::COUNT)))
            .collect::<Result<_, _>>()?;
        let draws_before = self.rng_draws;

        // 1. Predator movement, agent-index order.
        for i in 0..self.predators.len() {
            if !self.predators[i].alive {
                continue;
            }
            let mut act = actions[i];
            if act == Action::Up && self.draw_unit() < self.cfg.slip_prob {
                act = Action::Stay;
            }
            if let Some((dx, dy)) = act.delta() {
                let e = self.predators[i];
                let (nx, ny) = (e.x as i64 + dx, e.y as i64 + dy);
                if self.in_bounds(nx, ny) && self.is_free(nx as usize, ny as usize) {
                    let (nx, ny) = (nx as usize, ny as usize);
                    self.move_entity((e.x, e.y), (nx, ny), Occupant::Predator(i));
                    self.predators[i].x = nx;
                    self.predators[i].y = ny;
                }
            }
        }

        // 2. Prey movement: uniform among {stay + legal moves}, index order.
        for p in 0..self.prey.len() {
            if !self.prey[p].alive {
                continue;
            }
            let e = self.prey[p];
            let mut options: Vec<(usize, usize)> = vec![(e.x, e.y)];
            for (dx, dy) in [(0i64, -1i64), (0, 1), (-1, 0), (1, 0)] {
                let (nx, ny) = (e.x as i64 + dx, e.y as i64 + dy);
                if self.in_bounds(nx, ny) && self.is_free(nx as usize, ny as usize) {
                    options.push((nx as usize, ny as usize));
                }
            }
            let (nx, ny) = options[self.draw_range(options.len())];
            if (nx, ny) != (e.x, e.y) {
                self.move_entity((e.x, e.y), (nx, ny), Occupant::Prey(p));
                self.prey[p].x = nx;
                self.prey[p].y = ny;
            }
        }

        // 3. Capture resolution.
        let mut reward = 0.0;
        let mut info = StepInfo::default();
        let mut died: Vec<usize> = Vec::new();

        // Each capturing predator targets its adjacent live prey with the
        // lowest cell index; grouping is simultaneous.
        let mut prey_target: Vec<Option<usize>> = vec![None; self.predators.len()];
        let mut captors: Vec<Vec<usize>> = vec![Vec::new(); self.prey.len()];
        for i in 0..self.predators.len() {
            if !self.predators[i].alive || actions[i] != Action::Capture {
                continue;
            }
            let e = self.predators[i];
            if let Some(p) = self.adjacent_prey(e.x, e.y) {
                prey_target[i] = Some(p);
                captors[p].push(i);
            }
        }
        for p in 0..self.prey.len() {
            let group = &captors[p];
            match group.len() {
                0 => {}
                1 => {
                    reward += self.cfg.solo_capture_penalty;
                    info.solo_captures += 1;
                    if self.cfg.solo_removes_prey {
                        self.kill_prey(p);
                    }
                }
                _ => {
                    // Two lowest-indexed captors pair-capture; the rest take
                    // the solo penalty. Captors were pushed in index order.
                    reward += self.cfg.pair_capture_reward;
                    info.pair_captures += 1;
                    self.kill_prey(p);
                    for (rank, &pred) in group.iter().enumerate() {
                        if rank < 2 {
                            self.kill_predator(pred);
                            died.push(pred);
                        } else {
                            reward += self.cfg.solo_capture_penalty;
                            info.solo_captures += 1;
                        }
                    }
                }
            }
        }

        // Hare captures: only predators that chose Capture, survived, and had
        // no adjacent prey.
        if self.cfg.pair_capture_hares {
            let mut hare_captors: Vec<Vec<usize>> = vec![Vec::new(); self.hares.len()];
            for i in 0..self.predators.len() {
                if !self.predators[i].alive
                    || actions[i] != Action::Capture
                    || prey_target[i].is_some()
                {
                    continue;
                }
                let e = self.predators[i];
                if let Some(hh) = self.adjacent_hare(e.x, e.y) {
                    hare_captors[hh].push(i);
                }
            }
            for (hh, group) in hare_captors.iter().enumerate() {
                if group.is_empty() {
                    continue;
                }
                let multiplier = if group.len() >= 2 { 2.0 } else { 1.0 };
                reward += multiplier * self.cfg.hare_reward;
                info.hare_captures += 1;
                self.kill_hare(hh);
            }
        } else {
            for i in 0..self.predators.len() {
                if !self.predators[i].alive
                    || actions[i] != Action::Capture
                    || prey_target[i].is_some()
                {
                    continue;
                }
                let e = self.predators[i];
                if let Some(hh) = self.adjacent_hare(e.x, e.y) {
                    reward += self.cfg.hare_reward;
                    info.hare_captures += 1;
                    self.kill_hare(hh);
                }
            }
        }

        // 4. Bookkeeping.
        self.step_count += 1;
        self.done = self.prey_alive() == 0 || self.step_count >= self.cfg.max_steps;
        self.freeze_dead(&died);
        info.rng_draws_consumed = self.rng_draws - draws_before;
        Ok(StepResult {
            observations: self.observations(),
            team_reward: reward,
            done: self.done,
            info,
        })
    }
}

impl PredatorPrey {
    fn kill_prey(&mut self, p: usize) {
        let e = self.prey[p];
        self.prey[p].alive = false;
        let idx = self.cell_index(e.x, e.y);
        self.grid[idx] = Occupant::None;
    }

    fn kill_predator(&mut self, i: usize) {
        let e = self.predators[i];
        self.predators[i].alive = false;
        let idx = self.cell_index(e.x, e.y);
        self.grid[idx] = Occupant::None;
    }

    fn kill_hare(&mut self, hh: usize) {
        let e = self.hares[hh];
        self.hares[hh].alive = false;
        let idx = self.cell_index(e.x, e.y);
        self.grid[idx] = Occupant::None;
    }
}

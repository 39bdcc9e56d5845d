use std::collections::HashSet;

use crate::game::Game;
use crate::{Error, Result};

/// `(row, col)`, row 0 at the top.
pub type Cell = (usize, usize);

/// Largest joint state space a gridworld may have.
pub const MAX_GRID_STATES: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CollisionRule {
    /// Agents whose moves target the same cell all stay put.
    #[default]
    BlockBoth,
    AllowOverlap,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridAction {
    Stay = 0,
    Up = 1,
    Down = 2,
    Left = 3,
    Right = 4,
}

impl GridAction {
    pub const ALL: [GridAction; 5] = [
        GridAction::Stay,
        GridAction::Up,
        GridAction::Down,
        GridAction::Left,
        GridAction::Right,
    ];
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub width: usize,
    pub height: usize,
    pub walls: Vec<Cell>,
    pub hazards: Vec<Cell>,
    /// One goal per agent; the number of agents is `goals.len()`.
    pub goals: Vec<Cell>,
    /// Joint start cells. `None` gives a uniform initial distribution.
    pub starts: Option<Vec<Cell>>,
    pub collision_rule: CollisionRule,
}

impl GridSpec {
    pub fn n_agents(&self) -> usize {
        self.goals.len()
    }

    fn n_cells(&self) -> usize {
        self.width * self.height
    }

    fn cell_index(&self, (row, col): Cell) -> usize {
        row * self.width + col
    }

    fn cell_of(&self, index: usize) -> Cell {
        (index / self.width, index % self.width)
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::SpecInvalid(msg));
        if self.width == 0 || self.height == 0 {
            return bad("width and height must be positive".into());
        }
        if self.goals.is_empty() {
            return bad("at least one agent (goal) is required".into());
        }
        let inside = |&(r, c): &Cell| r < self.height && c < self.width;
        for (name, cells) in [
            ("walls", &self.walls),
            ("hazards", &self.hazards),
            ("goals", &self.goals),
        ] {
            if let Some(c) = cells.iter().find(|c| !inside(c)) {
                return bad(format!("{name} cell {c:?} outside the grid"));
            }
        }
        let walls: HashSet<Cell> = self.walls.iter().copied().collect();
        let hazards: HashSet<Cell> = self.hazards.iter().copied().collect();
        let blocked = |c: &Cell| walls.contains(c) || hazards.contains(c);
        if let Some(c) = self.goals.iter().find(|c| blocked(c)) {
            return bad(format!("goal {c:?} is a wall or hazard"));
        }
        if let Some(starts) = &self.starts {
            if starts.len() != self.n_agents() {
                return bad(format!(
                    "{} start cells for {} agents",
                    starts.len(),
                    self.n_agents()
                ));
            }
            if let Some(c) = starts.iter().find(|c| !inside(c)) {
                return bad(format!("start cell {c:?} outside the grid"));
            }
            if let Some(c) = starts.iter().find(|c| blocked(c)) {
                return bad(format!("start {c:?} is a wall or hazard"));
            }
        }
        let states = (self.n_cells() as u128).checked_pow(self.n_agents() as u32);
        if states.is_none_or(|s| s > MAX_GRID_STATES as u128) {
            return bad(format!("(width*height)^n_agents exceeds {MAX_GRID_STATES}"));
        }
        Ok(())
    }
}

fn manhattan(a: Cell, b: Cell) -> usize {
    a.0.abs_diff(b.0) + a.1.abs_diff(b.1)
}

/// Builds the joint-position game for `spec`.
///
/// States are mixed-radix over agent cells (agent 0 least significant, cells
/// row-major). Each agent has the five [`GridAction`]s; moving off the grid or
/// into a wall means staying. `h` is the smallest agent-to-hazard Manhattan
/// distance minus 0.5 (so `-0.5` on a hazard, `0.5` next to one); without
/// hazards it is `width + height - 0.5`. The reward at a state is
/// `sum_i -0.05 * dist(pos_i, goal_i)` plus 1 for every agent on its goal.
pub fn build_gridworld(spec: &GridSpec, gamma: f64, gamma_h: f64) -> Result<Game> {
    spec.validate()?;
    let n_agents = spec.n_agents();
    let n_cells = spec.n_cells();
    let n_states = n_cells.pow(n_agents as u32);
    let n_joint = 5usize.pow(n_agents as u32);
    let walls: HashSet<Cell> = spec.walls.iter().copied().collect();

    let decode_state = |mut s: usize| -> Vec<Cell> {
        (0..n_agents)
            .map(|_| {
                let c = spec.cell_of(s % n_cells);
                s /= n_cells;
                c
            })
            .collect()
    };
    let encode_state = |cells: &[Cell]| -> usize {
        cells
            .iter()
            .rev()
            .fold(0, |acc, &c| acc * n_cells + spec.cell_index(c))
    };
    let step = |(r, c): Cell, a: GridAction| -> Cell {
        let target = match a {
            GridAction::Stay => Some((r, c)),
            GridAction::Up => r.checked_sub(1).map(|r| (r, c)),
            GridAction::Down => (r + 1 < spec.height).then_some((r + 1, c)),
            GridAction::Left => c.checked_sub(1).map(|c| (r, c)),
            GridAction::Right => (c + 1 < spec.width).then_some((r, c + 1)),
        };
        target.filter(|t| !walls.contains(t)).unwrap_or((r, c))
    };

    let hazard_distance = |cell: Cell| -> f64 {
        spec.hazards
            .iter()
            .map(|&hz| manhattan(cell, hz))
            .min()
            .map_or((spec.width + spec.height) as f64, |d| d as f64)
    };

    let mut transition = Vec::with_capacity(n_states * n_joint);
    let mut reward = Vec::with_capacity(n_states * n_joint);
    let mut constraint = Vec::with_capacity(n_states);

    for s in 0..n_states {
        let pos = decode_state(s);
        let h = pos
            .iter()
            .map(|&c| hazard_distance(c) - 0.5)
            .fold(f64::INFINITY, f64::min);
        constraint.push(h);
        let r: f64 = pos
            .iter()
            .zip(&spec.goals)
            .map(|(&p, &g)| {
                let d = manhattan(p, g);
                -0.05 * d as f64 + if d == 0 { 1.0 } else { 0.0 }
            })
            .sum();

        for j in 0..n_joint {
            let mut code = j;
            let mut target: Vec<Cell> = pos
                .iter()
                .map(|&p| {
                    let a = GridAction::ALL[code % 5];
                    code /= 5;
                    step(p, a)
                })
                .collect();
            if spec.collision_rule == CollisionRule::BlockBoth {
                resolve_collisions(&pos, &mut target);
            }
            transition.push(encode_state(&target));
            reward.push(r);
        }
    }

    let initial_dist = match &spec.starts {
        None => Game::uniform_dist(n_states),
        Some(starts) => {
            let mut d = vec![0.0; n_states];
            d[encode_state(starts)] = 1.0;
            d
        }
    };

    Game::new(
        vec![5; n_agents],
        n_states,
        transition,
        reward,
        constraint,
        gamma,
        gamma_h,
        initial_dist,
    )
}

/// Agents sharing a target cell fall back to their current cell, repeated
/// until no moving agent shares its target. Each pass reverts all conflicting
/// agents at once so the outcome does not depend on agent labels.
fn resolve_collisions(current: &[Cell], target: &mut [Cell]) {
    loop {
        let conflicted: Vec<usize> = (0..target.len())
            .filter(|&i| {
                target[i] != current[i]
                    && (0..target.len()).any(|k| k != i && target[k] == target[i])
            })
            .collect();
        if conflicted.is_empty() {
            break;
        }
        for i in conflicted {
            target[i] = current[i];
        }
    }
}

/// 5x5, two agents, hazards across the middle row except a gap in the centre
/// column. Agent 0 heads for the bottom-right corner, agent 1 for the top-left,
/// so both have to share the gap.
pub fn grid5x5() -> GridSpec {
    GridSpec {
        width: 5,
        height: 5,
        walls: vec![],
        hazards: vec![(2, 0), (2, 1), (2, 3), (2, 4)],
        goals: vec![(4, 4), (0, 0)],
        starts: None,
        collision_rule: CollisionRule::BlockBoth,
    }
}

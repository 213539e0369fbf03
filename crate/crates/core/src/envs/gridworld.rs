//! Deterministic gridworld tasks with BFS-validated difficulty.
//!
//! Each task is a small board where the agent walks from a start cell to a
//! goal cell, earning the goal reward on arrival and a small step penalty
//! otherwise. Moving into walls or off the board leaves the agent in place.
//! Task difficulty is the shortest-path length from start to goal.

use std::collections::{BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum EnvError {
    #[error("cell {0:?} is outside the {1}x{2} board")]
    OutOfBounds(Cell, usize, usize),
    #[error("start and goal coincide at {0:?}")]
    StartIsGoal(Cell),
    #[error("{0} cell {1:?} is a wall")]
    SpecialCellWalled(&'static str, Cell),
    #[error("no path from start to goal")]
    Unreachable,
    #[error("path length {len} cannot fit: needs < max_steps ({max_steps}) and <= {reachable} on this board")]
    InfeasiblePathLength {
        len: usize,
        max_steps: usize,
        reachable: usize,
    },
    #[error("generated board failed validation for path length {0}")]
    GenerationFailed(usize),
    #[error("map parse error: {0}")]
    BadMap(String),
}

/// Board coordinate, row 0 at the top.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cell {
    pub row: usize,
    pub col: usize,
}

impl Cell {
    pub fn new(row: usize, col: usize) -> Self {
        Self { row, col }
    }
}

/// The four grid moves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    Up,
    Down,
    Left,
    Right,
}

impl Action {
    pub const ALL: [Action; 4] = [Action::Up, Action::Down, Action::Left, Action::Right];
    pub const COUNT: usize = 4;

    pub fn index(self) -> usize {
        match self {
            Action::Up => 0,
            Action::Down => 1,
            Action::Left => 2,
            Action::Right => 3,
        }
    }

    pub fn from_index(i: usize) -> Action {
        Self::ALL[i]
    }
}

/// One deterministic gridworld task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridworldSpec {
    pub name: String,
    pub width: usize,
    pub height: usize,
    pub walls: BTreeSet<Cell>,
    pub start: Cell,
    pub goal: Cell,
    pub step_reward: f64,
    pub goal_reward: f64,
    pub max_steps: usize,
}

impl GridworldSpec {
    /// Validates bounds, wall placement, and start-to-goal reachability.
    pub fn new(
        name: impl Into<String>,
        width: usize,
        height: usize,
        walls: BTreeSet<Cell>,
        start: Cell,
        goal: Cell,
        step_reward: f64,
        goal_reward: f64,
        max_steps: usize,
    ) -> Result<Self, EnvError> {
        let spec = Self {
            name: name.into(),
            width,
            height,
            walls,
            start,
            goal,
            step_reward,
            goal_reward,
            max_steps,
        };
        spec.validate()?;
        Ok(spec)
    }

    fn validate(&self) -> Result<(), EnvError> {
        for &cell in [&self.start, &self.goal].into_iter() {
            if !self.in_bounds(cell) {
                return Err(EnvError::OutOfBounds(cell, self.width, self.height));
            }
        }
        if self.start == self.goal {
            return Err(EnvError::StartIsGoal(self.start));
        }
        if self.walls.contains(&self.start) {
            return Err(EnvError::SpecialCellWalled("start", self.start));
        }
        if self.walls.contains(&self.goal) {
            return Err(EnvError::SpecialCellWalled("goal", self.goal));
        }
        for &w in &self.walls {
            if !self.in_bounds(w) {
                return Err(EnvError::OutOfBounds(w, self.width, self.height));
            }
        }
        if shortest_path_len(self).is_none() {
            return Err(EnvError::Unreachable);
        }
        Ok(())
    }

    pub fn in_bounds(&self, cell: Cell) -> bool {
        cell.row < self.height && cell.col < self.width
    }

    pub fn is_wall(&self, cell: Cell) -> bool {
        self.walls.contains(&cell)
    }

    pub fn n_cells(&self) -> usize {
        self.width * self.height
    }

    /// Flat index used for one-hot state encodings.
    pub fn cell_index(&self, cell: Cell) -> usize {
        cell.row * self.width + cell.col
    }

    /// Destination of a move, staying in place when blocked.
    pub fn apply_move(&self, from: Cell, action: Action) -> Cell {
        let candidate = match action {
            Action::Up => {
                if from.row == 0 {
                    return from;
                }
                Cell::new(from.row - 1, from.col)
            }
            Action::Down => Cell::new(from.row + 1, from.col),
            Action::Left => {
                if from.col == 0 {
                    return from;
                }
                Cell::new(from.row, from.col - 1)
            }
            Action::Right => Cell::new(from.row, from.col + 1),
        };
        if !self.in_bounds(candidate) || self.is_wall(candidate) {
            from
        } else {
            candidate
        }
    }
}

/// Result of one environment step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub next: Cell,
    pub reward: f64,
    pub terminated: bool,
    pub truncated: bool,
}

/// Advances the deterministic dynamics by one step.
///
/// Reaching the goal pays `goal_reward` and terminates; any other step pays
/// `step_reward`. When `step_index + 1` hits the step budget without the
/// goal, the episode truncates.
pub fn step(spec: &GridworldSpec, state: Cell, action: Action, step_index: usize) -> StepOutcome {
    debug_assert!(spec.in_bounds(state) && !spec.is_wall(state));
    debug_assert!(step_index < spec.max_steps);
    let next = spec.apply_move(state, action);
    if next == spec.goal {
        return StepOutcome {
            next,
            reward: spec.goal_reward,
            terminated: true,
            truncated: false,
        };
    }
    StepOutcome {
        next,
        reward: spec.step_reward,
        terminated: false,
        truncated: step_index + 1 >= spec.max_steps,
    }
}

/// Breadth-first shortest path length from start to goal, if any.
pub fn shortest_path_len(spec: &GridworldSpec) -> Option<usize> {
    let mut seen = vec![false; spec.n_cells()];
    let mut queue = VecDeque::new();
    seen[spec.cell_index(spec.start)] = true;
    queue.push_back((spec.start, 0usize));
    while let Some((cell, dist)) = queue.pop_front() {
        if cell == spec.goal {
            return Some(dist);
        }
        for action in Action::ALL {
            let next = spec.apply_move(cell, action);
            let idx = spec.cell_index(next);
            if !seen[idx] {
                seen[idx] = true;
                queue.push_back((next, dist + 1));
            }
        }
    }
    None
}

/// Board shape and reward scheme shared by a generated suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteParams {
    pub width: usize,
    pub height: usize,
    pub step_reward: f64,
    pub goal_reward: f64,
    pub max_steps: usize,
}

impl Default for SuiteParams {
    fn default() -> Self {
        Self {
            width: 7,
            height: 7,
            step_reward: -0.001,
            goal_reward: 1.0,
            max_steps: 15,
        }
    }
}

/// The default difficulty profile: shortest paths 3, 6, 9, 12.
pub const DEFAULT_PROFILE: [usize; 4] = [3, 6, 9, 12];

fn segment_distance(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len_sq = dx * dx + dy * dy;
    let t = if len_sq == 0.0 {
        0.0
    } else {
        (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len_sq).clamp(0.0, 1.0)
    };
    let (cx, cy) = (a.0 + t * dx, a.1 + t * dy);
    ((p.0 - cx).powi(2) + (p.1 - cy).powi(2)).sqrt()
}

/// Carves a corridor task between two cells: walls cover everything farther
/// than `radius` from the straight start-goal line, so the shortest path is
/// the Manhattan distance. The band widens (ultimately to a fully open
/// board) until breadth-first search confirms that length.
pub fn corridor_task(
    name: &str,
    start: Cell,
    goal: Cell,
    params: &SuiteParams,
) -> Result<GridworldSpec, EnvError> {
    let target_len = start.row.abs_diff(goal.row) + start.col.abs_diff(goal.col);
    for radius in [1.3, 1.7, 2.2, 3.0, f64::INFINITY] {
        let mut walls = BTreeSet::new();
        if radius.is_finite() {
            let a = (start.row as f64, start.col as f64);
            let b = (goal.row as f64, goal.col as f64);
            for row in 0..params.height {
                for col in 0..params.width {
                    let cell = Cell::new(row, col);
                    if cell == start || cell == goal {
                        continue;
                    }
                    if segment_distance((row as f64, col as f64), a, b) > radius {
                        walls.insert(cell);
                    }
                }
            }
        }
        let spec = GridworldSpec {
            name: name.to_string(),
            width: params.width,
            height: params.height,
            walls,
            start,
            goal,
            step_reward: params.step_reward,
            goal_reward: params.goal_reward,
            max_steps: params.max_steps,
        };
        if spec.validate().is_ok() && shortest_path_len(&spec) == Some(target_len) {
            return Ok(spec);
        }
    }
    Err(EnvError::GenerationFailed(target_len))
}

/// Start/goal endpoints for a requested path length. Every route heads
/// southeast, but `lane` alternates which corner region it occupies, so
/// different tasks share a movement direction without sharing cells.
fn route_endpoints(target_len: usize, lane: usize, width: usize, height: usize) -> (Cell, Cell) {
    let (w, h) = (width - 1, height - 1);
    let dr = target_len.div_ceil(2).min(h).max(target_len.saturating_sub(w));
    let dc = target_len - dr;
    if dr == h && dc == w {
        return (Cell::new(0, 0), Cell::new(h, w));
    }
    if lane % 2 == 0 {
        // Bottom-left lane.
        (Cell::new(h - dr, 0), Cell::new(h, dc))
    } else {
        // Top-right lane.
        (Cell::new(0, w - dc), Cell::new(dr, w))
    }
}

/// Generates one task whose shortest path is exactly `target_len`.
///
/// `lane` picks which board region the route occupies; see
/// [`build_gridworld_suite`], which alternates it per task so suite routes
/// overlap as little as the board allows while keeping one shared movement
/// direction.
pub fn generate_task(
    target_len: usize,
    lane: usize,
    params: &SuiteParams,
) -> Result<GridworldSpec, EnvError> {
    let reachable = params.width - 1 + params.height - 1;
    if target_len == 0 || target_len >= params.max_steps || target_len > reachable {
        return Err(EnvError::InfeasiblePathLength {
            len: target_len,
            max_steps: params.max_steps,
            reachable,
        });
    }
    let (start, goal) = route_endpoints(target_len, lane, params.width, params.height);
    corridor_task(&format!("span-{target_len}"), start, goal, params)
}

/// Generates one task per requested shortest-path length, alternating route
/// lanes across tasks.
pub fn build_gridworld_suite(
    profile: &[usize],
    params: &SuiteParams,
) -> Result<Vec<GridworldSpec>, EnvError> {
    profile
        .iter()
        .enumerate()
        .map(|(i, &len)| generate_task(len, i, params))
        .collect()
}

//! Multi-task environments: gridworld families with exact tabular oracles.

mod gridworld;
mod suite_file;
mod tabular;

pub use gridworld::{
    build_gridworld_suite, corridor_task, generate_task, shortest_path_len, step, Action, Cell,
    EnvError, GridworldSpec, StepOutcome, SuiteParams, DEFAULT_PROFILE,
};
pub use suite_file::{default_suite, parse_suite, write_suite, GridworldSuite};
pub use tabular::{exact_return, success_probability, to_tabular, uniform_policy, TabularMdp};

use serde::{Deserialize, Serialize};

/// One environment interaction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub state: Cell,
    pub action: Action,
    pub reward: f64,
}

/// One episode collected from a single task.
///
/// `terminated` (goal reached) and `truncated` (step budget exhausted) are
/// mutually exclusive; `final_state` is where the episode ended, needed to
/// bootstrap value estimates on truncation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub task: usize,
    pub steps: Vec<Transition>,
    pub terminated: bool,
    pub truncated: bool,
    pub success: bool,
    pub final_state: Cell,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Undiscounted sum of rewards.
    pub fn total_reward(&self) -> f64 {
        self.steps.iter().map(|t| t.reward).sum()
    }

    /// Discounted return from the start of the episode.
    pub fn discounted_return(&self, gamma: f64) -> f64 {
        let mut value = 0.0;
        let mut discount = 1.0;
        for t in &self.steps {
            value += discount * t.reward;
            discount *= gamma;
        }
        value
    }
}

//! Returns-to-go, value baselines, and per-task advantage normalization.
//!
//! Normalizing advantages per task instead of over the whole batch matters
//! when task return scales differ: under global normalization a low-return
//! task's advantages all land below the batch mean, so the update pushes
//! its action probabilities down even when the actions were good for that
//! task. Per-task normalization centers each task at zero.

use serde::{Deserialize, Serialize};

use crate::envs::Trajectory;
use crate::policy::params::state_index;

/// Discounted return-to-go at each step of a trajectory.
pub fn returns_to_go(traj: &Trajectory, gamma: f64) -> Vec<f64> {
    let mut out = vec![0.0; traj.len()];
    let mut acc = 0.0;
    for (i, t) in traj.steps.iter().enumerate().rev() {
        acc = t.reward + gamma * acc;
        out[i] = acc;
    }
    out
}

/// Tabular per-(state, task) value estimates regressed on Monte Carlo
/// returns-to-go.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueBaseline {
    values: Vec<f64>,
    n_states: usize,
    n_tasks: usize,
    learning_rate: f64,
}

impl ValueBaseline {
    pub fn new(n_states: usize, n_tasks: usize, learning_rate: f64) -> Self {
        Self {
            values: vec![0.0; n_states * n_tasks],
            n_states,
            n_tasks,
            learning_rate,
        }
    }

    pub fn value(&self, task: usize, state: usize) -> f64 {
        self.values[task * self.n_states + state]
    }

    /// Moves each visited `(state, task)` value toward the mean Monte Carlo
    /// return-to-go observed for it in the batch: `v += lr * (target - v)`.
    /// With `lr = 1` values land exactly on the batch means; repeated
    /// application on a fixed batch converges geometrically.
    pub fn update(&mut self, batch: &[Trajectory], gamma: f64, board_width: usize) {
        let mut sums = vec![0.0; self.values.len()];
        let mut counts = vec![0usize; self.values.len()];
        for traj in batch {
            let targets = returns_to_go(traj, gamma);
            for (step, &g) in traj.steps.iter().zip(&targets) {
                let idx = traj.task * self.n_states + state_index(board_width, step.state);
                sums[idx] += g;
                counts[idx] += 1;
            }
        }
        for i in 0..self.values.len() {
            if counts[i] > 0 {
                let target = sums[i] / counts[i] as f64;
                self.values[i] += self.learning_rate * (target - self.values[i]);
            }
        }
    }
}

/// Per-task normalization statistics over the raw advantages.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupStats {
    pub count: usize,
    pub mean: f64,
    pub std: f64,
}

/// Per-transition advantages aligned with a trajectory batch, plus the
/// per-task statistics used to normalize them.
#[derive(Debug, Clone, PartialEq)]
pub struct AdvantageBatch {
    pub per_trajectory: Vec<Vec<f64>>,
    pub stats: Vec<GroupStats>,
}

/// Raw advantages: return-to-go minus the per-(state, task) baseline.
pub fn raw_advantages(
    batch: &[Trajectory],
    baseline: &ValueBaseline,
    gamma: f64,
    board_width: usize,
) -> Vec<Vec<f64>> {
    batch
        .iter()
        .map(|traj| {
            returns_to_go(traj, gamma)
                .into_iter()
                .zip(&traj.steps)
                .map(|(g, step)| {
                    g - baseline.value(traj.task, state_index(board_width, step.state))
                })
                .collect()
        })
        .collect()
}

const DEGENERATE_STD: f64 = 1e-8;

fn group_stats(values: &[f64]) -> GroupStats {
    let count = values.len();
    if count == 0 {
        return GroupStats {
            count: 0,
            mean: 0.0,
            std: 0.0,
        };
    }
    let mean = values.iter().sum::<f64>() / count as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / count as f64;
    GroupStats {
        count,
        mean,
        std: var.sqrt(),
    }
}

/// Standardizes advantages within each task's transitions.
///
/// Tasks whose raw advantages have standard deviation below 1e-8 get zeroed
/// advantages instead of a blown-up division.
pub fn per_task_advantage_normalize(
    raw: &[Vec<f64>],
    tasks: &[usize],
    n_tasks: usize,
) -> AdvantageBatch {
    assert_eq!(raw.len(), tasks.len(), "one task id per trajectory");
    let mut grouped: Vec<Vec<f64>> = vec![Vec::new(); n_tasks];
    for (adv, &task) in raw.iter().zip(tasks) {
        grouped[task].extend_from_slice(adv);
    }
    let stats: Vec<GroupStats> = grouped.iter().map(|g| group_stats(g)).collect();
    let per_trajectory = raw
        .iter()
        .zip(tasks)
        .map(|(adv, &task)| {
            let s = stats[task];
            adv.iter()
                .map(|&a| {
                    if s.std < DEGENERATE_STD {
                        0.0
                    } else {
                        (a - s.mean) / (s.std + DEGENERATE_STD)
                    }
                })
                .collect()
        })
        .collect();
    AdvantageBatch {
        per_trajectory,
        stats,
    }
}

/// Standardizes advantages over the whole batch, ignoring task identity.
/// Kept for the normalization comparison; the trainer always normalizes
/// per task.
pub fn global_advantage_normalize(raw: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let all: Vec<f64> = raw.iter().flatten().copied().collect();
    let s = group_stats(&all);
    raw.iter()
        .map(|adv| {
            adv.iter()
                .map(|&a| {
                    if s.std < DEGENERATE_STD {
                        0.0
                    } else {
                        (a - s.mean) / (s.std + DEGENERATE_STD)
                    }
                })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::{Action, Cell, Transition};

    fn traj(task: usize, rewards: &[f64]) -> Trajectory {
        let steps = rewards
            .iter()
            .enumerate()
            .map(|(i, &r)| Transition {
                state: Cell::new(0, i % 3),
                action: Action::Right,
                reward: r,
            })
            .collect();
        Trajectory {
            task,
            steps,
            terminated: true,
            truncated: false,
            success: true,
            final_state: Cell::new(0, 0),
        }
    }

    #[test]
    fn returns_to_go_discounts_from_each_step() {
        let t = traj(0, &[1.0, 2.0, 4.0]);
        let g = returns_to_go(&t, 0.5);
        assert_eq!(g, vec![1.0 + 0.5 * (2.0 + 0.5 * 4.0), 2.0 + 2.0, 4.0]);
    }

    #[test]
    fn baseline_full_step_lands_on_batch_means() {
        let mut baseline = ValueBaseline::new(3, 1, 1.0);
        let batch = vec![traj(0, &[1.0, 0.0]), traj(0, &[3.0, 0.0])];
        baseline.update(&batch, 1.0, 3);
        // State (0,0) saw returns-to-go 1.0 and 3.0.
        assert_eq!(baseline.value(0, 0), 2.0);
    }

    #[test]
    fn baseline_zero_rate_is_inert_and_half_rate_converges() {
        let batch = vec![traj(0, &[2.0])];
        let mut frozen = ValueBaseline::new(3, 1, 0.0);
        frozen.update(&batch, 1.0, 3);
        assert_eq!(frozen.value(0, 0), 0.0);

        let mut half = ValueBaseline::new(3, 1, 0.5);
        let mut expected_gap: f64 = 2.0;
        for _ in 0..10 {
            half.update(&batch, 1.0, 3);
            expected_gap *= 0.5;
            assert!((half.value(0, 0) - (2.0 - expected_gap)).abs() < 1e-12);
        }
    }

    #[test]
    fn single_task_matches_global_normalization() {
        let raw = vec![vec![1.0, 2.0], vec![5.0, -1.0]];
        let per = per_task_advantage_normalize(&raw, &[0, 0], 1);
        let global = global_advantage_normalize(&raw);
        assert_eq!(per.per_trajectory, global);
        let s = per.stats[0];
        assert_eq!(s.count, 4);
        assert!((s.mean - 1.75).abs() < 1e-12);
    }

    #[test]
    fn normalized_groups_are_standardized() {
        let raw = vec![vec![3.0, 1.0, 2.0, 5.0], vec![0.4, 0.2, 0.1]];
        let out = per_task_advantage_normalize(&raw, &[0, 1], 2);
        for task in 0..2 {
            let values: Vec<f64> = out
                .per_trajectory
                .iter()
                .zip([0usize, 1])
                .filter(|(_, t)| *t == task)
                .flat_map(|(v, _)| v.iter().copied())
                .collect();
            let mean = values.iter().sum::<f64>() / values.len() as f64;
            let std = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>()
                / values.len() as f64)
                .sqrt();
            assert!(mean.abs() < 1e-6, "task {task} mean {mean}");
            assert!((std - 1.0).abs() < 1e-6, "task {task} std {std}");
        }
    }

    #[test]
    fn constant_advantages_are_zeroed() {
        let raw = vec![vec![0.7, 0.7, 0.7]];
        let out = per_task_advantage_normalize(&raw, &[0], 1);
        assert_eq!(out.per_trajectory[0], vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn two_scale_batch_shows_the_global_normalization_bias() {
        // Task 0 returns near 10, task 1 near 0.1. Global normalization
        // makes every task-1 advantage negative; per-task keeps both
        // groups centered.
        let raw = vec![
            vec![10.1, 9.9, 10.05, 9.95, 10.0],
            vec![0.12, 0.08, 0.11, 0.09, 0.10],
        ];
        let global = global_advantage_normalize(&raw);
        assert!(global[1].iter().all(|&a| a < 0.0));
        let per = per_task_advantage_normalize(&raw, &[0, 1], 2);
        for task in 0..2 {
            let mean: f64 =
                per.per_trajectory[task].iter().sum::<f64>() / per.per_trajectory[task].len() as f64;
            assert!(mean.abs() < 1e-6);
        }
    }
}

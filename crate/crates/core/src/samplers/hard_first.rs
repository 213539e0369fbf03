//! Active-set sampling over the lowest-return unsolved tasks.
//!
//! The sampler keeps an active pool of at most `K` unsolved tasks and draws
//! uniformly from it. A task whose return clears its solved threshold leaves
//! the pool and is replaced by the unsolved task with the smallest return; a
//! task that fails to clear its unsolvable threshold within its step budget
//! is retired. Because on-policy learners forget unsampled tasks, a solved
//! task whose return later drops below its threshold rejoins the pool. After
//! the stage-one budget the sampler switches to uniform draws over the
//! retired tasks.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::simplex::{kl_projection_min_prob, TaskDistribution};

use super::{SamplerError, SamplerObservation};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HardFirstConfig {
    /// Maximum size of the active pool.
    pub active_set_size: usize,
    /// Fraction of the total budget spent in stage one.
    pub b1_fraction: f64,
    /// Per-task floor `m_i`: returns at or below this after the step budget
    /// mark the task unsolvable.
    pub unsolvable_thresholds: Vec<f64>,
    /// Per-task ceiling `M_i`: returns above this mark the task solved.
    pub solved_thresholds: Vec<f64>,
    /// Environment steps a task may consume before the unsolvable check.
    pub per_task_step_budget: u64,
}

impl HardFirstConfig {
    /// Scalar-threshold convenience; the per-task budget defaults to
    /// `total_budget * b1_fraction / k`.
    pub fn scalar(
        k: usize,
        active_set_size: usize,
        b1_fraction: f64,
        unsolvable: f64,
        solved: f64,
        total_budget: u64,
    ) -> Self {
        Self {
            active_set_size,
            b1_fraction,
            unsolvable_thresholds: vec![unsolvable; k],
            solved_thresholds: vec![solved; k],
            per_task_step_budget: ((total_budget as f64 * b1_fraction) / k as f64) as u64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HardFirstState {
    pub active: BTreeSet<usize>,
    pub solved: BTreeSet<usize>,
    pub unsolvable: BTreeSet<usize>,
    pub steps_per_task: Vec<u64>,
    config: HardFirstConfig,
    initialized: bool,
}

impl HardFirstState {
    pub fn new(k: usize, config: HardFirstConfig) -> Result<Self, SamplerError> {
        if config.active_set_size == 0 {
            return Err(SamplerError::BadConfig("active set size must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&config.b1_fraction) {
            return Err(SamplerError::BadConfig(format!(
                "b1_fraction = {}",
                config.b1_fraction
            )));
        }
        if config.unsolvable_thresholds.len() != k || config.solved_thresholds.len() != k {
            return Err(SamplerError::BadConfig(
                "threshold vectors must have one entry per task".into(),
            ));
        }
        for i in 0..k {
            if config.unsolvable_thresholds[i] >= config.solved_thresholds[i] {
                return Err(SamplerError::BadConfig(format!(
                    "task {i}: unsolvable threshold must lie below solved threshold"
                )));
            }
        }
        Ok(Self {
            active: BTreeSet::new(),
            solved: BTreeSet::new(),
            unsolvable: BTreeSet::new(),
            steps_per_task: vec![0; k],
            config,
            initialized: false,
        })
    }

    pub fn config(&self) -> &HardFirstConfig {
        &self.config
    }

    fn n_tasks(&self) -> usize {
        self.steps_per_task.len()
    }

    /// Disjointness and size-bound invariant of the three pools.
    pub fn partition_invariant_holds(&self) -> bool {
        let k = self.n_tasks();
        let disjoint = self.active.is_disjoint(&self.solved)
            && self.active.is_disjoint(&self.unsolvable)
            && self.solved.is_disjoint(&self.unsolvable);
        let in_range = self
            .active
            .iter()
            .chain(&self.solved)
            .chain(&self.unsolvable)
            .all(|&i| i < k);
        let unsolved = k - self.solved.len() - self.unsolvable.len();
        let sized = !self.initialized
            || self.active.len() == self.config.active_set_size.min(unsolved);
        disjoint && in_range && sized
    }
}

/// One pool update followed by the stage-appropriate uniform distribution,
/// floor-projected over all tasks.
pub fn hard_first_update(
    state: &mut HardFirstState,
    obs: &SamplerObservation,
    eps_min: f64,
) -> Result<TaskDistribution, SamplerError> {
    let k = state.n_tasks();
    if obs.n_tasks() != k {
        return Err(SamplerError::BadObservation {
            field: "gaps",
            got: obs.n_tasks(),
            want: k,
        });
    }
    let returns = &obs.return_means;
    let cfg = state.config.clone();

    for i in 0..k {
        state.steps_per_task[i] += obs.env_steps_per_task[i];
    }

    // Solved transitions, both directions.
    for i in 0..k {
        if !state.unsolvable.contains(&i) && returns[i] > cfg.solved_thresholds[i] {
            state.solved.insert(i);
            state.active.remove(&i);
        }
    }
    let dropped: Vec<usize> = state
        .solved
        .iter()
        .copied()
        .filter(|&i| returns[i] < cfg.solved_thresholds[i])
        .collect();
    for i in dropped {
        state.solved.remove(&i);
        state.active.insert(i);
    }

    // Unsolvable check applies to tasks still being worked on.
    let timed_out: Vec<usize> = state
        .active
        .iter()
        .copied()
        .filter(|&i| {
            state.steps_per_task[i] >= cfg.per_task_step_budget
                && returns[i] <= cfg.unsolvable_thresholds[i]
        })
        .collect();
    for i in timed_out {
        state.active.remove(&i);
        state.unsolvable.insert(i);
    }

    // Refill vacancies with the lowest-return unsolved tasks (ties break
    // toward the lowest index), then trim overflow from re-entries.
    let mut candidates: Vec<usize> = (0..k)
        .filter(|i| {
            !state.active.contains(i) && !state.solved.contains(i) && !state.unsolvable.contains(i)
        })
        .collect();
    candidates.sort_by(|&a, &b| returns[a].total_cmp(&returns[b]).then(a.cmp(&b)));
    for i in candidates {
        if state.active.len() >= cfg.active_set_size {
            break;
        }
        state.active.insert(i);
    }
    while state.active.len() > cfg.active_set_size {
        let evict = state
            .active
            .iter()
            .copied()
            .max_by(|&a, &b| returns[a].total_cmp(&returns[b]).then(a.cmp(&b)))
            .unwrap();
        state.active.remove(&evict);
    }
    state.initialized = true;

    let stage_one = obs.env_steps_elapsed < (cfg.b1_fraction * obs.total_budget as f64) as u64;
    let pool: Vec<usize> = if stage_one {
        state.active.iter().copied().collect()
    } else {
        state.unsolvable.iter().copied().collect()
    };
    let mut weights = vec![0.0; k];
    if pool.is_empty() {
        weights.fill(1.0 / k as f64);
    } else {
        for &i in &pool {
            weights[i] = 1.0 / pool.len() as f64;
        }
    }
    let q = TaskDistribution::new(weights)?;
    if eps_min > 0.0 {
        Ok(kl_projection_min_prob(&q, eps_min)?)
    } else {
        Ok(q)
    }
}

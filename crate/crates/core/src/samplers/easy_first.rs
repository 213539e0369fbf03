//! Easiest-task-first curriculum over a supplied difficulty ranking.
//!
//! Sampling concentrates on the current focus task; once its success rate
//! clears the advance threshold the focus moves to the next-hardest task.
//! After the ranking is exhausted the sampler stays uniform.

use serde::{Deserialize, Serialize};

use crate::simplex::TaskDistribution;

use super::{SamplerError, SamplerObservation};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EasyFirstConfig {
    /// Task ids ordered easiest first; must be a permutation of `0..k`.
    pub ranking: Vec<usize>,
    /// Success rate at which the focus advances.
    pub advance_threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EasyFirstState {
    config: EasyFirstConfig,
    /// Position in the ranking; `== k` once the curriculum is exhausted.
    focus_pos: usize,
}

impl EasyFirstState {
    pub fn new(k: usize, config: EasyFirstConfig) -> Result<Self, SamplerError> {
        if config.ranking.len() != k {
            return Err(SamplerError::BadConfig(format!(
                "difficulty ranking has {} entries for {k} tasks",
                config.ranking.len()
            )));
        }
        let mut seen = vec![false; k];
        for &i in &config.ranking {
            if i >= k || seen[i] {
                return Err(SamplerError::BadConfig(
                    "difficulty ranking must be a permutation of the task ids".into(),
                ));
            }
            seen[i] = true;
        }
        if !(0.0..=1.0).contains(&config.advance_threshold) {
            return Err(SamplerError::BadConfig(format!(
                "advance threshold = {}",
                config.advance_threshold
            )));
        }
        Ok(Self {
            config,
            focus_pos: 0,
        })
    }

    /// The task currently receiving concentrated sampling, if any.
    pub fn focus(&self) -> Option<usize> {
        self.config.ranking.get(self.focus_pos).copied()
    }

    pub fn exhausted(&self) -> bool {
        self.focus_pos >= self.config.ranking.len()
    }
}

/// Advances the focus past every task whose success rate clears the
/// threshold, then concentrates `1 - eps_min * (k - 1)` mass on the focus.
/// An exhausted curriculum yields the uniform distribution.
pub fn easy_first_update(
    state: &mut EasyFirstState,
    obs: &SamplerObservation,
    eps_min: f64,
) -> Result<TaskDistribution, SamplerError> {
    let k = state.config.ranking.len();
    if obs.n_tasks() != k {
        return Err(SamplerError::BadObservation {
            field: "success_rates",
            got: obs.n_tasks(),
            want: k,
        });
    }
    while let Some(task) = state.focus() {
        if obs.success_rates[task] >= state.config.advance_threshold {
            state.focus_pos += 1;
        } else {
            break;
        }
    }
    match state.focus() {
        None => Ok(TaskDistribution::uniform(k)?),
        Some(task) => {
            let mut weights = vec![eps_min; k];
            weights[task] = 1.0 - eps_min * (k as f64 - 1.0);
            Ok(TaskDistribution::new(weights)?)
        }
    }
}

//! Return-gap computation and online reference-return management.
//!
//! A task's gap is how far the agent's return falls short of that task's
//! reference return, normalized by the reference-to-random-policy span so
//! gaps are comparable across tasks and bounded in `[0, 1]`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum GapError {
    #[error("reference return {j_ref} must exceed random-policy return {j_rand} (task {task})")]
    DegenerateSpan { task: usize, j_ref: f64, j_rand: f64 },
    #[error("non-finite input: {0}")]
    NonFinite(f64),
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("success threshold {0} must lie in [0, 1]")]
    BadThreshold(f64),
}

/// Shortfall of the observed return below the reference, clamped at zero.
pub fn return_gap(j_ref: f64, j_hat: f64) -> f64 {
    (j_ref - j_hat).max(0.0)
}

/// Gap normalized by the reference-to-random span and clamped into `[0, 1]`.
///
/// The clamp keeps returns below the random-policy baseline from inflating
/// gaps past 1, so the samplers' `[0, M=1]` bound holds.
pub fn normalized_gap(j_ref: f64, j_hat: f64, j_rand: f64) -> Result<f64, GapError> {
    if !j_ref.is_finite() || !j_hat.is_finite() || !j_rand.is_finite() {
        return Err(GapError::NonFinite(if !j_ref.is_finite() {
            j_ref
        } else if !j_hat.is_finite() {
            j_hat
        } else {
            j_rand
        }));
    }
    if j_ref <= j_rand {
        return Err(GapError::DegenerateSpan {
            task: 0,
            j_ref,
            j_rand,
        });
    }
    Ok(((j_ref - j_hat) / (j_ref - j_rand)).clamp(0.0, 1.0))
}

/// How a task's reference return evolves during training.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceMode {
    /// The reference is known up front and never changes.
    FixedKnown,
    /// Start from an optimistic bound; once the success rate clears the
    /// gate, follow the maximum observed return from then on.
    SuccessGated,
    /// Always track the maximum observed return.
    MaxObserved,
}

/// Per-task batch statistics produced by one training iteration.
///
/// `mean_return` is the batch Monte Carlo return estimate; entries with
/// `n_episodes == 0` are ignored by consumers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReturnEstimate {
    pub mean_return: Vec<f64>,
    pub success_rate: Vec<f64>,
    pub n_episodes: Vec<usize>,
}

impl ReturnEstimate {
    pub fn len(&self) -> usize {
        self.mean_return.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean_return.is_empty()
    }

    pub fn has_data(&self, task: usize) -> bool {
        self.n_episodes[task] > 0
    }
}

/// Per-task reference returns, random-policy returns, and observed maxima.
///
/// Invariants held across updates: `j_ref[i] > j_rand[i]` for every task and
/// `max_observed[i]` never decreases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceState {
    j_ref: Vec<f64>,
    j_rand: Vec<f64>,
    max_observed: Vec<f64>,
    success_threshold: f64,
    modes: Vec<ReferenceMode>,
    gate_passed: Vec<bool>,
}

impl ReferenceState {
    pub fn new(
        j_ref: Vec<f64>,
        j_rand: Vec<f64>,
        modes: Vec<ReferenceMode>,
        success_threshold: f64,
    ) -> Result<Self, GapError> {
        if j_ref.len() != j_rand.len() {
            return Err(GapError::LengthMismatch(j_ref.len(), j_rand.len()));
        }
        if j_ref.len() != modes.len() {
            return Err(GapError::LengthMismatch(j_ref.len(), modes.len()));
        }
        if !(0.0..=1.0).contains(&success_threshold) {
            return Err(GapError::BadThreshold(success_threshold));
        }
        for i in 0..j_ref.len() {
            if !(j_ref[i] > j_rand[i]) {
                return Err(GapError::DegenerateSpan {
                    task: i,
                    j_ref: j_ref[i],
                    j_rand: j_rand[i],
                });
            }
        }
        let max_observed = vec![f64::NEG_INFINITY; j_ref.len()];
        let gate_passed = vec![false; j_ref.len()];
        Ok(Self {
            j_ref,
            j_rand,
            max_observed,
            success_threshold,
            modes,
            gate_passed,
        })
    }

    /// All tasks share one mode and one reference/random pair per entry.
    pub fn with_mode(
        j_ref: Vec<f64>,
        j_rand: Vec<f64>,
        mode: ReferenceMode,
        success_threshold: f64,
    ) -> Result<Self, GapError> {
        let modes = vec![mode; j_ref.len()];
        Self::new(j_ref, j_rand, modes, success_threshold)
    }

    pub fn len(&self) -> usize {
        self.j_ref.len()
    }

    pub fn is_empty(&self) -> bool {
        self.j_ref.is_empty()
    }

    pub fn j_ref(&self) -> &[f64] {
        &self.j_ref
    }

    pub fn j_rand(&self) -> &[f64] {
        &self.j_rand
    }

    pub fn max_observed(&self) -> &[f64] {
        &self.max_observed
    }

    pub fn span(&self, task: usize) -> f64 {
        self.j_ref[task] - self.j_rand[task]
    }

    /// Folds one batch of return estimates into the reference state.
    ///
    /// Tasks without fresh episodes keep their prior values. A candidate
    /// reference that would not exceed the task's random-policy return is
    /// skipped so the normalization span stays positive.
    pub fn update(&mut self, est: &ReturnEstimate) -> Result<(), GapError> {
        if est.len() != self.j_ref.len() {
            return Err(GapError::LengthMismatch(est.len(), self.j_ref.len()));
        }
        for i in 0..self.j_ref.len() {
            if !est.has_data(i) {
                continue;
            }
            if est.mean_return[i] > self.max_observed[i] {
                self.max_observed[i] = est.mean_return[i];
            }
            match self.modes[i] {
                ReferenceMode::FixedKnown => {}
                ReferenceMode::SuccessGated => {
                    if est.success_rate[i] > self.success_threshold {
                        self.gate_passed[i] = true;
                    }
                    if self.gate_passed[i] && self.max_observed[i] > self.j_rand[i] {
                        self.j_ref[i] = self.max_observed[i];
                    }
                }
                ReferenceMode::MaxObserved => {
                    if self.max_observed[i] > self.j_rand[i] {
                        self.j_ref[i] = self.max_observed[i];
                    }
                }
            }
        }
        Ok(())
    }

    /// Normalized gaps for the given per-task return estimates.
    pub fn normalized_gaps(&self, j_hat: &[f64]) -> Result<Vec<f64>, GapError> {
        if j_hat.len() != self.j_ref.len() {
            return Err(GapError::LengthMismatch(j_hat.len(), self.j_ref.len()));
        }
        (0..j_hat.len())
            .map(|i| normalized_gap(self.j_ref[i], j_hat[i], self.j_rand[i]))
            .collect()
    }
}

/// What a task's tracked return falls back to when a batch contains no fresh
/// episodes for it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StaleReturnPolicy {
    /// Keep the previous estimate (default).
    CarryForward,
    /// Reset the estimate to zero. This reproduces the pathological
    /// behavior where a solved-but-unsampled task suddenly looks maximally
    /// unsolved again.
    Zero,
}

/// Rolling per-task return and success estimates with stale-task handling.
///
/// Return estimates follow the per-batch semantics of the training loop
/// (fresh batch means replace, missing batch means carry forward or zero
/// per the stale policy). Success rates instead pool episodes over the last
/// `success_window` iterations: tasks held at the minimum sampling floor
/// collect roughly one episode per iteration, and a single episode is far
/// too coarse for thresholds like "advance at 0.9".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReturnTracker {
    current: Vec<f64>,
    previous: Vec<f64>,
    success: Vec<f64>,
    policy: StaleReturnPolicy,
    window: std::collections::VecDeque<(Vec<usize>, Vec<f64>)>,
    success_window: usize,
}

impl ReturnTracker {
    /// `initial` seeds the pre-training estimates; the random-policy returns
    /// are the natural choice.
    pub fn new(initial: Vec<f64>, policy: StaleReturnPolicy, success_window: usize) -> Self {
        let k = initial.len();
        Self {
            previous: initial.clone(),
            current: initial,
            success: vec![0.0; k],
            policy,
            window: std::collections::VecDeque::new(),
            success_window: success_window.max(1),
        }
    }

    pub fn update(&mut self, est: &ReturnEstimate) -> Result<(), GapError> {
        let k = self.current.len();
        if est.len() != k {
            return Err(GapError::LengthMismatch(est.len(), k));
        }
        self.previous.copy_from_slice(&self.current);
        for i in 0..k {
            if est.has_data(i) {
                self.current[i] = est.mean_return[i];
            } else if self.policy == StaleReturnPolicy::Zero {
                self.current[i] = 0.0;
            }
        }
        let successes: Vec<f64> = (0..k)
            .map(|i| est.success_rate[i] * est.n_episodes[i] as f64)
            .collect();
        self.window.push_back((est.n_episodes.clone(), successes));
        if self.window.len() > self.success_window {
            self.window.pop_front();
        }
        for i in 0..k {
            let episodes: usize = self.window.iter().map(|(n, _)| n[i]).sum();
            if episodes > 0 {
                let hits: f64 = self.window.iter().map(|(_, s)| s[i]).sum();
                self.success[i] = hits / episodes as f64;
            }
        }
        Ok(())
    }

    pub fn returns(&self) -> &[f64] {
        &self.current
    }

    pub fn previous_returns(&self) -> &[f64] {
        &self.previous
    }

    /// Per-task success rates pooled over the success window.
    pub fn success_rates(&self) -> &[f64] {
        &self.success
    }
}

//! The six task-sampling strategies behind a single contract: observe
//! per-task statistics, update internal state, expose a distribution.
//!
//! The gap-driven sampler and the two score-driven baselines share one
//! mirror-ascent-plus-projection pipeline and differ only in the score
//! vector they feed it, so performance differences reflect prioritization
//! strategy rather than update machinery. The remaining strategies are a
//! fixed uniform distribution and two stage-based curricula.

mod easy_first;
mod hard_first;

pub use easy_first::{easy_first_update, EasyFirstConfig, EasyFirstState};
pub use hard_first::{hard_first_update, HardFirstConfig, HardFirstState};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::envs::{Cell, Trajectory};
use crate::rng::sample_categorical;
use crate::simplex::{
    kl_projection_min_prob, mirror_ascent_step, GapVector, SimplexError, TaskDistribution,
};

#[derive(Debug, Error, PartialEq)]
pub enum SamplerError {
    #[error(transparent)]
    Simplex(#[from] SimplexError),
    #[error("bad sampler configuration: {0}")]
    BadConfig(String),
    #[error("observation field {field} has length {got}, expected {want}")]
    BadObservation {
        field: &'static str,
        got: usize,
        want: usize,
    },
    #[error("learning-potential sampler needs value-loss scores")]
    MissingValueLoss,
}

/// Per-task statistics a sampler may consume after each training iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplerObservation {
    /// Normalized return gaps, entries in [0, 1].
    pub gaps: GapVector,
    /// Current per-task Monte Carlo return estimates.
    pub return_means: Vec<f64>,
    /// The previous iteration's estimates.
    pub prev_return_means: Vec<f64>,
    /// Per-task success rates in [0, 1].
    pub success_rates: Vec<f64>,
    /// Mean per-trajectory value-loss scores, when a value baseline exists.
    pub value_loss_scores: Option<Vec<f64>>,
    /// Per-task normalizer `j_ref - j_rand` shared with the gap scale.
    pub return_scales: Vec<f64>,
    /// Environment steps consumed so far across all tasks.
    pub env_steps_elapsed: u64,
    /// Environment steps collected for each task in the last iteration.
    pub env_steps_per_task: Vec<u64>,
    /// Total environment-step budget for the run.
    pub total_budget: u64,
}

impl SamplerObservation {
    pub fn n_tasks(&self) -> usize {
        self.gaps.len()
    }

    fn validate(&self) -> Result<(), SamplerError> {
        let k = self.n_tasks();
        let check = |field: &'static str, got: usize| {
            if got == k {
                Ok(())
            } else {
                Err(SamplerError::BadObservation { field, got, want: k })
            }
        };
        check("return_means", self.return_means.len())?;
        check("prev_return_means", self.prev_return_means.len())?;
        check("success_rates", self.success_rates.len())?;
        check("return_scales", self.return_scales.len())?;
        check("env_steps_per_task", self.env_steps_per_task.len())?;
        if let Some(v) = &self.value_loss_scores {
            check("value_loss_scores", v.len())?;
        }
        Ok(())
    }
}

/// Mirror-ascent step on a `[0, 1]` score vector followed by the
/// minimum-probability projection. `eps_min = 0` skips the projection.
pub fn score_pipeline(
    q: &TaskDistribution,
    scores: &GapVector,
    eta: f64,
    alpha: f64,
    eps_min: f64,
) -> Result<TaskDistribution, SamplerError> {
    let p0 = TaskDistribution::uniform(q.len())?;
    let stepped = mirror_ascent_step(q, scores, eta, alpha, &p0)?;
    if eps_min > 0.0 {
        Ok(kl_projection_min_prob(&stepped, eps_min)?)
    } else {
        Ok(stepped)
    }
}

/// Gap-driven update: one mirror-ascent step toward the softmax best
/// response over the normalized return gaps, then the floor projection.
pub fn return_gap_update(
    q: &TaskDistribution,
    obs: &SamplerObservation,
    eta: f64,
    alpha: f64,
    eps_min: f64,
) -> Result<TaskDistribution, SamplerError> {
    obs.validate()?;
    score_pipeline(q, &obs.gaps, eta, alpha, eps_min)
}

/// Learning-progress scores: absolute change in return between consecutive
/// iterations, on the same scale as the gaps.
pub fn learning_progress_scores(obs: &SamplerObservation) -> Vec<f64> {
    obs.return_means
        .iter()
        .zip(&obs.prev_return_means)
        .zip(&obs.return_scales)
        .map(|((&now, &before), &scale)| {
            if scale > 0.0 {
                ((now - before).abs() / scale).clamp(0.0, 1.0)
            } else {
                0.0
            }
        })
        .collect()
}

/// Learning-progress update: the mirror pipeline with
/// `z_i = |J_t,i - J_{t-1},i|` (scaled into [0, 1]) in place of the gaps.
pub fn learning_progress_update(
    q: &TaskDistribution,
    obs: &SamplerObservation,
    eta: f64,
    alpha: f64,
    eps_min: f64,
) -> Result<TaskDistribution, SamplerError> {
    obs.validate()?;
    let scores = GapVector::normalized(learning_progress_scores(obs))?;
    score_pipeline(q, &scores, eta, alpha, eps_min)
}

/// Min-max scales raw per-task value-loss scores into `[0, 1]`.
/// A constant score vector maps to all zeros.
pub fn min_max_scale(raw: &[f64]) -> Vec<f64> {
    let lo = raw.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = raw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(hi - lo).is_finite() || hi - lo < 1e-12 {
        return vec![0.0; raw.len()];
    }
    raw.iter().map(|&v| (v - lo) / (hi - lo)).collect()
}

/// Learning-potential update: the mirror pipeline with min-max-scaled
/// value-loss scores in place of the gaps.
pub fn learning_potential_update(
    q: &TaskDistribution,
    obs: &SamplerObservation,
    eta: f64,
    alpha: f64,
    eps_min: f64,
) -> Result<TaskDistribution, SamplerError> {
    obs.validate()?;
    let raw = obs
        .value_loss_scores
        .as_ref()
        .ok_or(SamplerError::MissingValueLoss)?;
    let scores = GapVector::normalized(min_max_scale(raw))?;
    score_pipeline(q, &scores, eta, alpha, eps_min)
}

/// Mean absolute lambda-weighted TD-error sum over a trajectory:
/// `(1/T) sum_t | sum_{k>=t} (gamma lambda)^{k-t} delta_k |` with
/// `delta_k = r_k + gamma V(s_{k+1}) - V(s_k)`.
///
/// The bootstrap value is zero on true termination and `V(final_state)` on
/// truncation.
pub fn learning_potential_score<F>(
    traj: &Trajectory,
    value_fn: F,
    gamma: f64,
    lambda: f64,
) -> f64
where
    F: Fn(usize, Cell) -> f64,
{
    if traj.is_empty() {
        return 0.0;
    }
    let n = traj.len();
    let mut deltas = Vec::with_capacity(n);
    for (i, step) in traj.steps.iter().enumerate() {
        let next_value = if i + 1 < n {
            value_fn(traj.task, traj.steps[i + 1].state)
        } else if traj.truncated {
            value_fn(traj.task, traj.final_state)
        } else {
            0.0
        };
        deltas.push(step.reward + gamma * next_value - value_fn(traj.task, step.state));
    }
    let mut acc = 0.0;
    let mut total = 0.0;
    for &delta in deltas.iter().rev() {
        acc = delta + gamma * lambda * acc;
        total += acc.abs();
    }
    total / n as f64
}

/// Categorical draw of a task id, deterministic given the stream state.
pub fn sample_task<R: Rng>(q: &TaskDistribution, rng: &mut R) -> usize {
    sample_categorical(q.probs(), rng)
}

/// Which sampling strategy a run uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerKind {
    Uniform,
    ReturnGap,
    LearningProgress,
    LearningPotential,
    HardFirst,
    EasyFirst,
}

impl SamplerKind {
    pub fn name(self) -> &'static str {
        match self {
            SamplerKind::Uniform => "uniform",
            SamplerKind::ReturnGap => "return_gap",
            SamplerKind::LearningProgress => "learning_progress",
            SamplerKind::LearningPotential => "learning_potential",
            SamplerKind::HardFirst => "hard_first",
            SamplerKind::EasyFirst => "easy_first",
        }
    }
}

/// A stateful sampler owning its current task distribution.
#[derive(Debug, Clone)]
pub enum Sampler {
    Uniform {
        q: TaskDistribution,
    },
    ReturnGap {
        q: TaskDistribution,
        eta: f64,
        alpha: f64,
        eps_min: f64,
    },
    LearningProgress {
        q: TaskDistribution,
        eta: f64,
        alpha: f64,
        eps_min: f64,
    },
    LearningPotential {
        q: TaskDistribution,
        eta: f64,
        alpha: f64,
        eps_min: f64,
    },
    HardFirst {
        q: TaskDistribution,
        state: HardFirstState,
        eps_min: f64,
    },
    EasyFirst {
        q: TaskDistribution,
        state: EasyFirstState,
        eps_min: f64,
    },
}

/// Mirror-ascent hyperparameters shared by the score-driven samplers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MirrorParams {
    pub eta: f64,
    pub alpha: f64,
}

impl Sampler {
    pub fn uniform(k: usize) -> Result<Self, SamplerError> {
        Ok(Sampler::Uniform {
            q: TaskDistribution::uniform(k)?,
        })
    }

    pub fn return_gap(k: usize, mp: MirrorParams, eps_min: f64) -> Result<Self, SamplerError> {
        check_mirror(k, mp, eps_min)?;
        Ok(Sampler::ReturnGap {
            q: TaskDistribution::uniform(k)?,
            eta: mp.eta,
            alpha: mp.alpha,
            eps_min,
        })
    }

    pub fn learning_progress(
        k: usize,
        mp: MirrorParams,
        eps_min: f64,
    ) -> Result<Self, SamplerError> {
        check_mirror(k, mp, eps_min)?;
        Ok(Sampler::LearningProgress {
            q: TaskDistribution::uniform(k)?,
            eta: mp.eta,
            alpha: mp.alpha,
            eps_min,
        })
    }

    pub fn learning_potential(
        k: usize,
        mp: MirrorParams,
        eps_min: f64,
    ) -> Result<Self, SamplerError> {
        check_mirror(k, mp, eps_min)?;
        Ok(Sampler::LearningPotential {
            q: TaskDistribution::uniform(k)?,
            eta: mp.eta,
            alpha: mp.alpha,
            eps_min,
        })
    }

    pub fn hard_first(
        k: usize,
        cfg: HardFirstConfig,
        eps_min: f64,
    ) -> Result<Self, SamplerError> {
        let state = HardFirstState::new(k, cfg)?;
        Ok(Sampler::HardFirst {
            q: TaskDistribution::uniform(k)?,
            state,
            eps_min,
        })
    }

    pub fn easy_first(
        k: usize,
        cfg: EasyFirstConfig,
        eps_min: f64,
    ) -> Result<Self, SamplerError> {
        let state = EasyFirstState::new(k, cfg)?;
        Ok(Sampler::EasyFirst {
            q: TaskDistribution::uniform(k)?,
            state,
            eps_min,
        })
    }

    pub fn kind(&self) -> SamplerKind {
        match self {
            Sampler::Uniform { .. } => SamplerKind::Uniform,
            Sampler::ReturnGap { .. } => SamplerKind::ReturnGap,
            Sampler::LearningProgress { .. } => SamplerKind::LearningProgress,
            Sampler::LearningPotential { .. } => SamplerKind::LearningPotential,
            Sampler::HardFirst { .. } => SamplerKind::HardFirst,
            Sampler::EasyFirst { .. } => SamplerKind::EasyFirst,
        }
    }

    /// The current task distribution.
    pub fn distribution(&self) -> &TaskDistribution {
        match self {
            Sampler::Uniform { q }
            | Sampler::ReturnGap { q, .. }
            | Sampler::LearningProgress { q, .. }
            | Sampler::LearningPotential { q, .. }
            | Sampler::HardFirst { q, .. }
            | Sampler::EasyFirst { q, .. } => q,
        }
    }

    /// Folds one iteration's statistics into the sampler state and returns
    /// the refreshed distribution.
    pub fn observe(&mut self, obs: &SamplerObservation) -> Result<&TaskDistribution, SamplerError> {
        match self {
            Sampler::Uniform { .. } => {}
            Sampler::ReturnGap {
                q,
                eta,
                alpha,
                eps_min,
            } => {
                *q = return_gap_update(q, obs, *eta, *alpha, *eps_min)?;
            }
            Sampler::LearningProgress {
                q,
                eta,
                alpha,
                eps_min,
            } => {
                *q = learning_progress_update(q, obs, *eta, *alpha, *eps_min)?;
            }
            Sampler::LearningPotential {
                q,
                eta,
                alpha,
                eps_min,
            } => {
                *q = learning_potential_update(q, obs, *eta, *alpha, *eps_min)?;
            }
            Sampler::HardFirst { q, state, eps_min } => {
                obs.validate()?;
                *q = hard_first_update(state, obs, *eps_min)?;
            }
            Sampler::EasyFirst { q, state, eps_min } => {
                obs.validate()?;
                *q = easy_first_update(state, obs, *eps_min)?;
            }
        }
        Ok(self.distribution())
    }
}

fn check_mirror(k: usize, mp: MirrorParams, eps_min: f64) -> Result<(), SamplerError> {
    if !(mp.eta > 0.0) || !mp.eta.is_finite() {
        return Err(SamplerError::BadConfig(format!("eta = {}", mp.eta)));
    }
    if !(mp.alpha > 0.0) || mp.alpha > mp.eta {
        return Err(SamplerError::BadConfig(format!(
            "alpha = {} must lie in (0, eta = {}]",
            mp.alpha, mp.eta
        )));
    }
    if eps_min < 0.0 || eps_min * k as f64 >= 1.0 {
        return Err(SamplerError::BadConfig(format!(
            "eps_min = {eps_min} infeasible for {k} tasks"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::{Action, Transition};
    use crate::rng::{stream, Purpose};
    use crate::simplex::softmax_best_response;

    pub(crate) fn observation(gaps: &[f64]) -> SamplerObservation {
        let k = gaps.len();
        SamplerObservation {
            gaps: GapVector::normalized(gaps.to_vec()).unwrap(),
            return_means: vec![0.0; k],
            prev_return_means: vec![0.0; k],
            success_rates: vec![0.0; k],
            value_loss_scores: None,
            return_scales: vec![1.0; k],
            env_steps_elapsed: 0,
            env_steps_per_task: vec![0; k],
            total_budget: 1000,
        }
    }

    #[test]
    fn zero_gaps_keep_uniform() {
        let q = TaskDistribution::uniform(4).unwrap();
        let out = return_gap_update(&q, &observation(&[0.0; 4]), 8.0, 4.0, 0.02).unwrap();
        for &p in out.probs() {
            assert!((p - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn full_step_without_floor_is_the_best_response() {
        let q = TaskDistribution::uniform(4).unwrap();
        let obs = observation(&[0.9, 0.2, 0.4, 0.0]);
        let out = return_gap_update(&q, &obs, 8.0, 8.0, 0.0).unwrap();
        let best = softmax_best_response(&obs.gaps, 8.0).unwrap();
        for i in 0..4 {
            assert!((out.get(i) - best.get(i)).abs() < 1e-12);
        }
    }

    #[test]
    fn one_hot_gap_concentrates_and_respects_floor() {
        let q = TaskDistribution::uniform(4).unwrap();
        let out = return_gap_update(&q, &observation(&[1.0, 0.0, 0.0, 0.0]), 8.0, 4.0, 0.02)
            .unwrap();
        assert!(out.get(0) > 0.8, "got {:?}", out.probs());
        for i in 1..4 {
            assert!(out.get(i) >= 0.02 - 1e-12);
        }
    }

    #[test]
    fn stale_returns_give_zero_progress_scores() {
        let q = TaskDistribution::new(vec![0.7, 0.1, 0.1, 0.1]).unwrap();
        let mut obs = observation(&[0.0; 4]);
        obs.return_means = vec![0.4; 4];
        obs.prev_return_means = vec![0.4; 4];
        assert_eq!(learning_progress_scores(&obs), vec![0.0; 4]);
        // Zero scores pull the distribution back toward uniform.
        let out = learning_progress_update(&q, &obs, 8.0, 4.0, 0.0).unwrap();
        let before = crate::simplex::kl_divergence(&q, &TaskDistribution::uniform(4).unwrap());
        let after = crate::simplex::kl_divergence(&out, &TaskDistribution::uniform(4).unwrap());
        assert!(after < before);
    }

    #[test]
    fn improving_task_gains_probability() {
        let q = TaskDistribution::uniform(4).unwrap();
        let mut obs = observation(&[0.0; 4]);
        obs.prev_return_means = vec![0.2, 0.2, 0.2, 0.2];
        obs.return_means = vec![0.5, 0.2, 0.2, 0.2];
        let out = learning_progress_update(&q, &obs, 12.0, 6.0, 0.0).unwrap();
        assert!(out.get(0) > 0.25);
        for i in 1..4 {
            assert!(out.get(i) < 0.25);
        }
    }

    #[test]
    fn progress_scores_share_the_gap_scale() {
        let mut obs = observation(&[0.0; 2]);
        obs.prev_return_means = vec![0.0, 0.0];
        obs.return_means = vec![0.5, 0.5];
        obs.return_scales = vec![1.0, 0.5];
        assert_eq!(learning_progress_scores(&obs), vec![0.5, 1.0]);
    }

    #[test]
    fn potential_update_requires_scores() {
        let q = TaskDistribution::uniform(3).unwrap();
        let obs = observation(&[0.0; 3]);
        assert!(matches!(
            learning_potential_update(&q, &obs, 8.0, 4.0, 0.02),
            Err(SamplerError::MissingValueLoss)
        ));
    }

    #[test]
    fn min_max_scaling_handles_constant_scores() {
        assert_eq!(min_max_scale(&[0.4, 0.4, 0.4]), vec![0.0, 0.0, 0.0]);
        let scaled = min_max_scale(&[1.0, 3.0, 2.0]);
        assert_eq!(scaled, vec![0.0, 1.0, 0.5]);
    }

    fn traj_with_rewards(rewards: &[f64], truncated: bool) -> Trajectory {
        Trajectory {
            task: 0,
            steps: rewards
                .iter()
                .map(|&r| Transition {
                    state: Cell::new(0, 0),
                    action: Action::Right,
                    reward: r,
                })
                .collect(),
            terminated: !truncated,
            truncated,
            success: !truncated,
            final_state: Cell::new(0, 1),
        }
    }

    #[test]
    fn potential_score_zero_when_values_are_perfect() {
        // Constant zero rewards with a zero value function: all deltas zero.
        let traj = traj_with_rewards(&[0.0, 0.0, 0.0], false);
        let score = learning_potential_score(&traj, |_, _| 0.0, 0.99, 0.95);
        assert_eq!(score, 0.0);
    }

    #[test]
    fn potential_score_single_step_is_abs_delta() {
        let traj = traj_with_rewards(&[-0.7], false);
        let score = learning_potential_score(&traj, |_, _| 0.0, 0.99, 0.95);
        assert!((score - 0.7).abs() < 1e-15);
    }

    #[test]
    fn potential_score_matches_hand_expansion() {
        // deltas (1, -1, 0.5) with gamma*lambda = 0.5 give mean 0.625.
        // Zero values and termination make deltas equal the rewards.
        let traj = traj_with_rewards(&[1.0, -1.0, 0.5], false);
        let gamma = 0.5 / 0.95;
        let score = learning_potential_score(&traj, |_, _| 0.0, gamma, 0.95);
        assert!((score - 0.625).abs() < 1e-12, "score {score}");
    }

    #[test]
    fn potential_score_brute_force_oracle() {
        // Nested-loop evaluation of the double sum on a random trajectory.
        let mut rng = stream(3, Purpose::Rollout, 0, 0);
        let rewards: Vec<f64> = (0..7).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let traj = traj_with_rewards(&rewards, true);
        let values: Vec<f64> = (0..8).map(|_| rng.gen_range(-0.5..0.5)).collect();
        // Distinct value per step index via the column coordinate.
        let mut steps = traj.steps.clone();
        for (i, s) in steps.iter_mut().enumerate() {
            s.state = Cell::new(0, i);
        }
        let traj = Trajectory {
            steps,
            final_state: Cell::new(0, 7),
            ..traj
        };
        let value_fn = |_: usize, c: Cell| values[c.col];
        let (gamma, lambda) = (0.99, 0.95);
        let score = learning_potential_score(&traj, value_fn, gamma, lambda);

        let n = traj.len();
        let mut deltas = Vec::new();
        for i in 0..n {
            let next = if i + 1 < n { values[i + 1] } else { values[7] };
            deltas.push(rewards[i] + gamma * next - values[i]);
        }
        let mut total = 0.0;
        for t in 0..n {
            let mut inner = 0.0;
            for k in t..n {
                inner += (gamma * lambda).powi((k - t) as i32) * deltas[k];
            }
            total += inner.abs();
        }
        assert!((score - total / n as f64).abs() < 1e-12);
    }

    #[test]
    fn sample_task_point_mass_and_determinism() {
        let q = TaskDistribution::new(vec![0.0, 1.0, 0.0]).unwrap();
        let mut rng = stream(5, Purpose::TaskDraw, 0, 0);
        for _ in 0..50 {
            assert_eq!(sample_task(&q, &mut rng), 1);
        }
        let u = TaskDistribution::uniform(4).unwrap();
        let draw = |seed| {
            let mut rng = stream(seed, Purpose::TaskDraw, 1, 2);
            (0..20).map(|_| sample_task(&u, &mut rng)).collect::<Vec<_>>()
        };
        assert_eq!(draw(9), draw(9));
        assert_ne!(draw(9), draw(10));
    }

    #[test]
    fn sample_task_frequencies_within_three_sigma() {
        let q = TaskDistribution::uniform(4).unwrap();
        let mut rng = stream(6, Purpose::TaskDraw, 0, 0);
        let n = 100_000;
        let mut counts = [0usize; 4];
        for _ in 0..n {
            counts[sample_task(&q, &mut rng)] += 1;
        }
        let sigma = (0.25 * 0.75 / n as f64).sqrt();
        for &c in &counts {
            let f = c as f64 / n as f64;
            assert!((f - 0.25).abs() <= 3.0 * sigma, "freq {f}");
        }
    }

    #[test]
    fn uniform_sampler_is_a_fixed_point() {
        let mut sampler = Sampler::uniform(4).unwrap();
        let before = sampler.distribution().clone();
        for gaps in [[0.0; 4], [1.0, 0.5, 0.25, 0.0]] {
            sampler.observe(&observation(&gaps)).unwrap();
            assert_eq!(sampler.distribution(), &before);
        }
    }

    #[test]
    fn every_sampler_respects_the_floor() {
        let eps = 0.02;
        let obs = {
            let mut o = observation(&[1.0, 0.6, 0.2, 0.0]);
            o.return_means = vec![0.0, 0.4, 0.8, 1.0];
            o.prev_return_means = vec![0.0, 0.2, 0.9, 1.0];
            o.success_rates = vec![0.0, 0.3, 0.95, 1.0];
            o.value_loss_scores = Some(vec![0.5, 0.1, 0.05, 0.01]);
            o.env_steps_per_task = vec![100, 100, 100, 100];
            o.env_steps_elapsed = 400;
            o
        };
        let mp = MirrorParams {
            eta: 8.0,
            alpha: 4.0,
        };
        let hf = HardFirstConfig {
            active_set_size: 2,
            b1_fraction: 0.85,
            unsolvable_thresholds: vec![0.0; 4],
            solved_thresholds: vec![0.8; 4],
            per_task_step_budget: 10_000,
        };
        let ef = EasyFirstConfig {
            ranking: vec![3, 2, 1, 0],
            advance_threshold: 0.9,
        };
        let mut samplers = vec![
            Sampler::uniform(4).unwrap(),
            Sampler::return_gap(4, mp, eps).unwrap(),
            Sampler::learning_progress(4, mp, eps).unwrap(),
            Sampler::learning_potential(4, mp, eps).unwrap(),
            Sampler::hard_first(4, hf, eps).unwrap(),
            Sampler::easy_first(4, ef, eps).unwrap(),
        ];
        for sampler in &mut samplers {
            let kind = sampler.kind();
            let q = sampler.observe(&obs).unwrap();
            for &p in q.probs() {
                assert!(p >= eps - 1e-12, "{kind:?} violated the floor: {:?}", q.probs());
            }
        }
    }

    #[test]
    fn score_shift_invariance_of_the_pipeline() {
        let q = TaskDistribution::new(vec![0.4, 0.3, 0.2, 0.1]).unwrap();
        let base = [0.1, 0.4, 0.2, 0.3];
        let shifted: Vec<f64> = base.iter().map(|&g| g + 0.5).collect();
        let a = score_pipeline(
            &q,
            &GapVector::normalized(base.to_vec()).unwrap(),
            6.0,
            3.0,
            0.02,
        )
        .unwrap();
        let b = score_pipeline(
            &q,
            &GapVector::normalized(shifted).unwrap(),
            6.0,
            3.0,
            0.02,
        )
        .unwrap();
        for i in 0..4 {
            assert!((a.get(i) - b.get(i)).abs() < 1e-12);
        }
    }

    #[test]
    fn bad_mirror_configs_are_rejected() {
        let mp = MirrorParams {
            eta: 8.0,
            alpha: 9.0,
        };
        assert!(Sampler::return_gap(4, mp, 0.02).is_err());
        let mp = MirrorParams {
            eta: 0.0,
            alpha: 0.0,
        };
        assert!(Sampler::return_gap(4, mp, 0.02).is_err());
        let mp = MirrorParams {
            eta: 8.0,
            alpha: 4.0,
        };
        assert!(Sampler::return_gap(4, mp, 0.3).is_err());
    }
}

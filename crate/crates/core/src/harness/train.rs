//! The training loop: sample tasks, roll out episodes, estimate returns,
//! update references and gaps, refresh the sampler, update the policy.
//!
//! Each iteration fills a buffer of episodes drawn from the current task
//! distribution (or uniformly for the reweighting variant), computes fresh
//! per-task Monte Carlo return and success estimates, folds them into the
//! reference state, feeds the normalized gaps to the sampler, and finally
//! takes one REINFORCE step with per-task-normalized advantages.
//!
//! Every random draw comes from a counter-based stream keyed by seed,
//! purpose, iteration, and episode index, so a `(config, seed)` pair fully
//! determines the run regardless of scheduling.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::envs::{exact_return, to_tabular, uniform_policy, GridworldSuite, Trajectory};
use crate::gap::{ReferenceMode, ReferenceState, ReturnEstimate, ReturnTracker};
use crate::policy::{
    per_task_advantage_normalize, raw_advantages, reinforce_gradient, rollout_episode,
    AdvantageBatch, PolicyParams, PolicyTable, ValueBaseline,
};
use crate::rng::{sample_categorical, stream, Purpose};
use crate::samplers::{learning_potential_score, SamplerObservation};
use crate::simplex::GapVector;

use super::config::{Method, RunConfig};
use super::HarnessError;

/// Per-task slice of one iteration's record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskIterationRecord {
    /// Current return estimate (carry-forward when the task got no fresh
    /// episodes, per the stale-return policy).
    pub return_mean: f64,
    pub success_rate: f64,
    /// Sampling probability that generated this iteration's batch. For the
    /// reweighting variant this is the adaptive weight vector, while the
    /// actual draws were uniform.
    pub q: f64,
    pub gap: f64,
    pub j_ref: f64,
    pub episodes: usize,
}

/// One training iteration's metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub iteration: usize,
    /// Cumulative environment steps after this iteration.
    pub env_steps: u64,
    pub per_task: Vec<TaskIterationRecord>,
    /// Wall-clock time of the iteration; excluded from CSV output so
    /// artifacts stay byte-identical across machines and schedulers.
    pub wall_clock_ms: f64,
}

impl RunRecord {
    /// Success rate averaged over tasks.
    pub fn mean_success(&self) -> f64 {
        self.per_task.iter().map(|t| t.success_rate).sum::<f64>() / self.per_task.len() as f64
    }
}

/// Everything a finished (or aborted) run produced.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub records: Vec<RunRecord>,
    pub final_params: PolicyParams,
    /// Set when a mid-run numeric fault aborted training; records hold
    /// every iteration completed before the fault.
    pub fault: Option<String>,
}

/// First cumulative step count at which mean success reaches `threshold`,
/// or `None` if the run never got there.
pub fn steps_to_threshold(records: &[RunRecord], threshold: f64) -> Option<u64> {
    records
        .iter()
        .find(|r| r.mean_success() >= threshold)
        .map(|r| r.env_steps)
}

/// Scales each trajectory's normalized advantages by `k * q[task]`, the
/// importance weight that makes a uniformly sampled batch match the
/// `q`-resampled objective in expectation.
pub fn apply_objective_weights(
    advantages: &mut AdvantageBatch,
    tasks: &[usize],
    q: &[f64],
) -> Result<(), HarnessError> {
    if tasks.len() != advantages.per_trajectory.len() {
        return Err(HarnessError::BadConfig(
            "one task id per advantage row required".into(),
        ));
    }
    let k = q.len() as f64;
    for (row, &task) in advantages.per_trajectory.iter_mut().zip(tasks) {
        let w = k * q[task];
        for a in row.iter_mut() {
            *a *= w;
        }
    }
    Ok(())
}

/// Runs one training configuration to its environment-step budget.
///
/// Configuration violations are rejected before any work; mid-run numeric
/// faults abort the loop and surface in [`RunResult::fault`] with all
/// records up to the last valid iteration.
pub fn run_training(config: &RunConfig, suite: &GridworldSuite) -> Result<RunResult, HarnessError> {
    let k = suite.len();
    if k == 0 {
        return Err(HarnessError::BadConfig("suite has no tasks".into()));
    }
    let (width, height) = (suite.tasks[0].width, suite.tasks[0].height);
    if suite
        .tasks
        .iter()
        .any(|t| t.width != width || t.height != height)
    {
        return Err(HarnessError::BadConfig(
            "all tasks in a suite must share board dimensions".into(),
        ));
    }
    if !(0.0..1.0).contains(&suite.gamma) {
        return Err(HarnessError::BadConfig(format!(
            "suite gamma {} must lie in [0, 1)",
            suite.gamma
        )));
    }
    config.validate(k)?;
    let gamma = suite.gamma;
    let n_cells = width * height;
    let seed = config.seed;

    // Exact random-policy returns from the tabular oracle; these anchor the
    // gap normalization and seed the return tracker.
    let j_rand: Vec<f64> = suite
        .tasks
        .iter()
        .map(|spec| {
            let mdp = to_tabular(spec, gamma);
            exact_return(&mdp, &uniform_policy(&mdp), spec.max_steps)
        })
        .collect();

    let j_ref_init: Vec<f64> = match config.reference.mode {
        ReferenceMode::FixedKnown => vec![config.reference.fixed_value; k],
        // Optimistic bound: best per-step reward times the step budget.
        ReferenceMode::SuccessGated | ReferenceMode::MaxObserved => suite
            .tasks
            .iter()
            .map(|t| t.goal_reward.max(t.step_reward) * t.max_steps as f64)
            .collect(),
    };
    let mut reference = ReferenceState::with_mode(
        j_ref_init,
        j_rand.clone(),
        config.reference.mode,
        config.reference.success_threshold,
    )?;
    let mut tracker = ReturnTracker::new(
        j_rand.clone(),
        config.stale_return_policy,
        config.success_window,
    );
    let mut value_loss_tracker = vec![0.0; k];

    let mut sampler = if k >= 2 {
        Some(config.build_sampler(k)?)
    } else {
        None
    };
    let needs_value_loss = config.method == Method::LearningPotential;

    let mut init_rng = stream(seed, Purpose::PolicyInit, 0, 0);
    let mut params = PolicyParams::init(config.learner.architecture(), n_cells, k, 4, &mut init_rng);
    let mut baseline = ValueBaseline::new(n_cells, k, config.learner.value_learning_rate);

    let mut records: Vec<RunRecord> = Vec::new();
    let mut fault = None;
    let mut env_steps: u64 = 0;
    let mut iteration = 0usize;
    let mut batch: Vec<Trajectory> = Vec::with_capacity(config.episodes_per_iteration);

    while env_steps < config.budget_env_steps {
        iteration += 1;
        let started = Instant::now();
        let table = match PolicyTable::build(&params) {
            Ok(t) => t,
            Err(e) => {
                fault = Some(format!("iteration {iteration}: {e}"));
                break;
            }
        };

        // The distribution that governs this iteration: draws for the
        // resampling methods, objective weights for the reweighting one.
        let q_now: Vec<f64> = match &sampler {
            Some(s) => s.distribution().probs().to_vec(),
            None => vec![1.0],
        };
        let draw_probs: Vec<f64> = if config.method.reweights_objective() {
            vec![1.0 / k as f64; k]
        } else {
            q_now.clone()
        };

        batch.clear();
        let mut fresh_count = vec![0usize; k];
        let mut fresh_return_sum = vec![0.0; k];
        let mut fresh_success_sum = vec![0.0; k];
        let mut steps_per_task = vec![0u64; k];
        for episode in 0..config.episodes_per_iteration {
            let task = if k == 1 {
                0
            } else {
                let mut rng = stream(seed, Purpose::TaskDraw, iteration as u64, episode as u64);
                sample_categorical(&draw_probs, &mut rng)
            };
            let mut rng = stream(seed, Purpose::Rollout, iteration as u64, episode as u64);
            let traj = rollout_episode(&table, &suite.tasks[task], task, width, &mut rng);
            env_steps += traj.len() as u64;
            steps_per_task[task] += traj.len() as u64;
            fresh_count[task] += 1;
            fresh_return_sum[task] += traj.discounted_return(gamma);
            fresh_success_sum[task] += if traj.success { 1.0 } else { 0.0 };
            batch.push(traj);
        }

        let estimate = ReturnEstimate {
            mean_return: (0..k)
                .map(|i| {
                    if fresh_count[i] > 0 {
                        fresh_return_sum[i] / fresh_count[i] as f64
                    } else {
                        0.0
                    }
                })
                .collect(),
            success_rate: (0..k)
                .map(|i| {
                    if fresh_count[i] > 0 {
                        fresh_success_sum[i] / fresh_count[i] as f64
                    } else {
                        0.0
                    }
                })
                .collect(),
            n_episodes: fresh_count.clone(),
        };

        // Value-loss scores use the critic as it stood when the batch was
        // collected, before this iteration's baseline regression.
        if needs_value_loss {
            let mut sums = vec![0.0; k];
            for traj in &batch {
                sums[traj.task] += learning_potential_score(
                    traj,
                    |task, cell| baseline.value(task, crate::policy::state_index(width, cell)),
                    gamma,
                    config.learner.gae_lambda,
                );
            }
            for i in 0..k {
                if fresh_count[i] > 0 {
                    value_loss_tracker[i] = sums[i] / fresh_count[i] as f64;
                }
            }
        }

        tracker.update(&estimate)?;
        reference.update(&estimate)?;
        let gaps = reference.normalized_gaps(tracker.returns())?;

        if let Some(s) = sampler.as_mut() {
            let obs = SamplerObservation {
                gaps: GapVector::normalized(gaps.clone())?,
                return_means: tracker.returns().to_vec(),
                prev_return_means: tracker.previous_returns().to_vec(),
                success_rates: tracker.success_rates().to_vec(),
                value_loss_scores: needs_value_loss.then(|| value_loss_tracker.clone()),
                return_scales: (0..k).map(|i| reference.span(i)).collect(),
                env_steps_elapsed: env_steps,
                env_steps_per_task: steps_per_task,
                total_budget: config.budget_env_steps,
            };
            s.observe(&obs)?;
        }

        // Policy update on the collected batch.
        let raw = raw_advantages(&batch, &baseline, gamma, width);
        let tasks: Vec<usize> = batch.iter().map(|t| t.task).collect();
        let mut advantages = per_task_advantage_normalize(&raw, &tasks, k);
        if config.method.reweights_objective() {
            apply_objective_weights(&mut advantages, &tasks, &q_now)?;
        }
        let grad = match reinforce_gradient(
            &params,
            &table,
            &batch,
            &advantages,
            width,
            config.learner.entropy_coef,
        ) {
            Ok(g) => g,
            Err(e) => {
                fault = Some(format!("iteration {iteration}: {e}"));
                break;
            }
        };
        baseline.update(&batch, gamma, width);
        params.apply_step(&grad, config.learner.learning_rate);

        records.push(RunRecord {
            iteration,
            env_steps,
            per_task: (0..k)
                .map(|i| TaskIterationRecord {
                    return_mean: tracker.returns()[i],
                    success_rate: tracker.success_rates()[i],
                    q: q_now[i],
                    gap: gaps[i],
                    j_ref: reference.j_ref()[i],
                    episodes: fresh_count[i],
                })
                .collect(),
            wall_clock_ms: started.elapsed().as_secs_f64() * 1e3,
        });
    }

    Ok(RunResult {
        records,
        final_params: params,
        fault,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::{build_gridworld_suite, SuiteParams};
    use crate::policy::GroupStats;

    fn tiny_suite() -> GridworldSuite {
        GridworldSuite {
            gamma: 0.99,
            tasks: build_gridworld_suite(&[2, 4], &SuiteParams::default()).unwrap(),
        }
    }

    fn strip_wall_clock(records: &[RunRecord]) -> Vec<RunRecord> {
        records
            .iter()
            .map(|r| RunRecord {
                wall_clock_ms: 0.0,
                ..r.clone()
            })
            .collect()
    }

    #[test]
    fn uniform_method_never_moves_the_distribution() {
        let cfg = RunConfig::new(Method::Uniform, 1, 4_000);
        let out = run_training(&cfg, &tiny_suite()).unwrap();
        assert!(out.fault.is_none());
        assert!(!out.records.is_empty());
        for record in &out.records {
            for task in &record.per_task {
                assert!((task.q - 0.5).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn identical_seeds_give_bit_identical_records() {
        let cfg = RunConfig::new(Method::ReturnGap, 7, 6_000);
        let suite = tiny_suite();
        let a = run_training(&cfg, &suite).unwrap();
        let b = run_training(&cfg, &suite).unwrap();
        assert_eq!(strip_wall_clock(&a.records), strip_wall_clock(&b.records));
        assert_eq!(a.final_params, b.final_params);
        let mut other = cfg.clone();
        other.seed = 8;
        let c = run_training(&other, &suite).unwrap();
        assert_ne!(strip_wall_clock(&a.records), strip_wall_clock(&c.records));
    }

    #[test]
    fn record_stream_invariants_hold() {
        let cfg = RunConfig::new(Method::ReturnGap, 3, 8_000);
        let out = run_training(&cfg, &tiny_suite()).unwrap();
        let mut last_steps = 0;
        for record in &out.records {
            assert!(record.env_steps >= last_steps);
            last_steps = record.env_steps;
            let q_sum: f64 = record.per_task.iter().map(|t| t.q).sum();
            assert!((q_sum - 1.0).abs() < 1e-9);
            for task in &record.per_task {
                assert!((0.0..=1.0).contains(&task.gap));
                assert!((0.0..=1.0).contains(&task.success_rate));
            }
        }
    }

    #[test]
    fn single_task_suite_degenerates_to_plain_training() {
        let suite = GridworldSuite {
            gamma: 0.99,
            tasks: build_gridworld_suite(&[3], &SuiteParams::default()).unwrap(),
        };
        let cfg = RunConfig::new(Method::ReturnGap, 2, 3_000);
        let out = run_training(&cfg, &suite).unwrap();
        assert!(out.fault.is_none());
        for record in &out.records {
            assert_eq!(record.per_task.len(), 1);
            assert_eq!(record.per_task[0].q, 1.0);
            assert_eq!(record.per_task[0].episodes, cfg.episodes_per_iteration);
        }
    }

    #[test]
    fn objective_weights_scale_rows_per_task() {
        let mut adv = AdvantageBatch {
            per_trajectory: vec![vec![1.0, -1.0], vec![2.0], vec![0.5]],
            stats: vec![
                GroupStats {
                    count: 0,
                    mean: 0.0,
                    std: 0.0
                };
                2
            ],
        };
        // Uniform q leaves everything unchanged.
        apply_objective_weights(&mut adv, &[0, 1, 0], &[0.5, 0.5]).unwrap();
        assert_eq!(adv.per_trajectory, vec![vec![1.0, -1.0], vec![2.0], vec![0.5]]);
        // A point mass zeroes out the other task's contributions.
        apply_objective_weights(&mut adv, &[0, 1, 0], &[0.0, 1.0]).unwrap();
        assert_eq!(adv.per_trajectory, vec![vec![0.0, 0.0], vec![4.0], vec![0.0]]);
    }

    #[test]
    fn reweighting_draws_uniformly_but_reports_adaptive_weights() {
        let cfg = RunConfig::new(Method::ReweightReturnGap, 5, 12_000);
        let out = run_training(&cfg, &tiny_suite()).unwrap();
        assert!(out.fault.is_none());
        // Fresh episode counts stay near-uniform even when q drifts.
        let (mut eps0, mut eps1) = (0usize, 0usize);
        let mut q_moved = false;
        for record in &out.records {
            eps0 += record.per_task[0].episodes;
            eps1 += record.per_task[1].episodes;
            if (record.per_task[0].q - 0.5).abs() > 0.05 {
                q_moved = true;
            }
        }
        let ratio = eps0 as f64 / (eps0 + eps1) as f64;
        assert!((ratio - 0.5).abs() < 0.05, "draw ratio {ratio}");
        assert!(q_moved, "adaptive weights never moved");
    }

    #[test]
    fn numeric_faults_abort_with_partial_records() {
        let mut cfg = RunConfig::new(Method::Uniform, 1, 50_000);
        cfg.learner.learning_rate = f64::INFINITY; // forces non-finite weights
        let out = run_training(&cfg, &tiny_suite()).unwrap();
        assert!(out.fault.is_some(), "expected a numeric fault");
        assert!(!out.records.is_empty());
        let last = out.records.last().unwrap();
        assert!(last.per_task.iter().all(|t| t.q.is_finite()));
    }

    #[test]
    fn config_violations_fail_before_any_work() {
        let cfg = RunConfig::new(Method::EasyFirst, 0, 1_000);
        assert!(matches!(
            run_training(&cfg, &tiny_suite()),
            Err(HarnessError::BadConfig(_))
        ));
    }
}

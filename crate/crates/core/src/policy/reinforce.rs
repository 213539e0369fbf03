//! Episode rollouts and the analytic policy-gradient estimator.

use rand::Rng;

use crate::envs::{step, Action, GridworldSpec, Trajectory, Transition};
use crate::policy::advantage::AdvantageBatch;
use crate::policy::params::{state_index, PolicyError, PolicyParams, PolicyTable};
use crate::rng::sample_categorical;

/// Plays one episode of `task` under the cached policy table.
pub fn rollout_episode<R: Rng>(
    table: &PolicyTable,
    spec: &GridworldSpec,
    task: usize,
    board_width: usize,
    rng: &mut R,
) -> Trajectory {
    let mut state = spec.start;
    let mut steps = Vec::with_capacity(spec.max_steps);
    let mut terminated = false;
    let mut truncated = false;
    for step_index in 0..spec.max_steps {
        let probs = table.probs(state_index(board_width, state), task);
        let action = Action::from_index(sample_categorical(probs, rng));
        let out = step(spec, state, action, step_index);
        steps.push(Transition {
            state,
            action,
            reward: out.reward,
        });
        state = out.next;
        terminated = out.terminated;
        truncated = out.truncated;
        if terminated || truncated {
            break;
        }
    }
    Trajectory {
        task,
        steps,
        terminated,
        truncated,
        success: terminated,
        final_state: state,
    }
}

/// The scalar surrogate whose gradient REINFORCE follows:
/// mean over episodes of `sum_t A_t log pi(a_t | s_t, i)`, plus an optional
/// entropy bonus. Used by the finite-difference gradient checks.
pub fn surrogate_value(
    params: &PolicyParams,
    batch: &[Trajectory],
    advantages: &AdvantageBatch,
    board_width: usize,
    entropy_coef: f64,
) -> Result<f64, PolicyError> {
    check_alignment(batch, advantages)?;
    let mut total = 0.0;
    for (traj, adv) in batch.iter().zip(&advantages.per_trajectory) {
        for (step, &a) in traj.steps.iter().zip(adv) {
            let probs = params.action_probs(state_index(board_width, step.state), traj.task)?;
            total += a * probs[step.action.index()].ln();
            if entropy_coef != 0.0 {
                let entropy: f64 = -probs
                    .iter()
                    .filter(|&&p| p > 0.0)
                    .map(|&p| p * p.ln())
                    .sum::<f64>();
                total += entropy_coef * entropy;
            }
        }
    }
    Ok(total / batch.len() as f64)
}

/// Exact analytic gradient of [`surrogate_value`], averaged over episodes.
///
/// `table` caches the batch policy's forward passes; it must be built from
/// `params`.
pub fn reinforce_gradient(
    params: &PolicyParams,
    table: &PolicyTable,
    batch: &[Trajectory],
    advantages: &AdvantageBatch,
    board_width: usize,
    entropy_coef: f64,
) -> Result<Vec<f64>, PolicyError> {
    check_alignment(batch, advantages)?;
    let mut grad = vec![0.0; params.n_params()];
    let scale = 1.0 / batch.len() as f64;
    for (traj, adv) in batch.iter().zip(&advantages.per_trajectory) {
        for (step, &a) in traj.steps.iter().zip(adv) {
            let s = state_index(board_width, step.state);
            if a != 0.0 {
                params.accumulate_log_prob_grad_cached(
                    table,
                    s,
                    traj.task,
                    step.action.index(),
                    a * scale,
                    &mut grad,
                );
            }
            if entropy_coef != 0.0 {
                params.accumulate_entropy_grad_cached(
                    table,
                    s,
                    traj.task,
                    entropy_coef * scale,
                    &mut grad,
                );
            }
        }
    }
    Ok(grad)
}

fn check_alignment(batch: &[Trajectory], advantages: &AdvantageBatch) -> Result<(), PolicyError> {
    if batch.is_empty() {
        return Err(PolicyError::DimensionMismatch("empty batch".into()));
    }
    if batch.len() != advantages.per_trajectory.len() {
        return Err(PolicyError::DimensionMismatch(format!(
            "{} trajectories vs {} advantage rows",
            batch.len(),
            advantages.per_trajectory.len()
        )));
    }
    for (i, (traj, adv)) in batch.iter().zip(&advantages.per_trajectory).enumerate() {
        if traj.len() != adv.len() {
            return Err(PolicyError::DimensionMismatch(format!(
                "trajectory {i}: {} steps vs {} advantages",
                traj.len(),
                adv.len()
            )));
        }
    }
    Ok(())
}

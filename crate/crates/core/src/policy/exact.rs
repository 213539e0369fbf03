//! Ground-truth policy gradients via dynamic programming, and the
//! sample-size-vs-gradient-accuracy experiment.

use crate::envs::{to_tabular, GridworldSpec, TabularMdp};
use crate::policy::advantage::returns_to_go;
use crate::policy::params::{state_index, PolicyError, PolicyParams, PolicyTable};
use crate::policy::reinforce::rollout_episode;
use crate::rng::{stream, Purpose};

/// Action distributions for every MDP state under the given parameters.
pub fn mdp_policy(
    mdp: &TabularMdp,
    params: &PolicyParams,
    task: usize,
    board_width: usize,
) -> Result<Vec<Vec<f64>>, PolicyError> {
    mdp.state_cells
        .iter()
        .map(|&cell| params.action_probs(state_index(board_width, cell), task))
        .collect()
}

/// Exact finite-horizon policy gradient by backward values and forward
/// state occupancies:
///
/// `grad J = sum_t gamma^t sum_s d_t(s) sum_a pi(a|s) Q_t(s,a) grad log pi(a|s)`.
///
/// This is the ground truth the Monte Carlo REINFORCE estimator is measured
/// against.
pub fn exact_policy_gradient(
    mdp: &TabularMdp,
    params: &PolicyParams,
    task: usize,
    horizon: usize,
    board_width: usize,
) -> Result<Vec<f64>, PolicyError> {
    let policy = mdp_policy(mdp, params, task, board_width)?;
    let (n_s, n_a) = (mdp.n_states, mdp.n_actions);

    // values[u][s]: expected discounted return with u steps remaining.
    let mut values = vec![vec![0.0; n_s]; horizon + 1];
    for u in 1..=horizon {
        for s in 0..n_s {
            let mut v = 0.0;
            for a in 0..n_a {
                let pa = policy[s][a];
                if pa == 0.0 {
                    continue;
                }
                let mut q = mdp.rewards[s][a];
                for (ns, &p) in mdp.transitions[s][a].iter().enumerate() {
                    if p > 0.0 {
                        q += mdp.gamma * p * values[u - 1][ns];
                    }
                }
                v += pa * q;
            }
            values[u][s] = v;
        }
    }

    // coeff[s][a] accumulates gamma^t d_t(s) pi(a|s) Q_t(s,a) over time.
    let mut coeff = vec![vec![0.0; n_a]; n_s];
    let mut occupancy = mdp.initial_dist.clone();
    let mut next = vec![0.0; n_s];
    let mut discount = 1.0;
    for t in 0..horizon {
        let remaining = horizon - t;
        next.iter_mut().for_each(|d| *d = 0.0);
        for s in 0..n_s {
            let mass = occupancy[s];
            if mass == 0.0 || s == mdp.goal_state {
                continue;
            }
            for a in 0..n_a {
                let pa = policy[s][a];
                if pa == 0.0 {
                    continue;
                }
                let mut q = mdp.rewards[s][a];
                for (ns, &p) in mdp.transitions[s][a].iter().enumerate() {
                    if p > 0.0 {
                        q += mdp.gamma * p * values[remaining - 1][ns];
                        next[ns] += mass * pa * p;
                    }
                }
                coeff[s][a] += discount * mass * pa * q;
            }
        }
        std::mem::swap(&mut occupancy, &mut next);
        discount *= mdp.gamma;
    }

    let mut grad = vec![0.0; params.n_params()];
    for s in 0..n_s {
        if s == mdp.goal_state {
            continue;
        }
        let board_state = state_index(board_width, mdp.state_cells[s]);
        for a in 0..n_a {
            if coeff[s][a] != 0.0 {
                params.accumulate_log_prob_grad(board_state, task, a, coeff[s][a], &mut grad)?;
            }
        }
    }
    Ok(grad)
}

/// One point of the gradient-accuracy curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CosinePoint {
    pub n_episodes: usize,
    pub cosine: f64,
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

/// Cosine similarity between Monte Carlo gradient estimates and the exact
/// gradient, as a function of sample size.
///
/// For each repeat the estimator accumulates episodes once and evaluates
/// every requested prefix size, so larger sample sizes reuse the smaller
/// ones' episodes (common random numbers across curve points). Episode
/// weights are `sum_{k>=t} gamma^k r_k`, the unbiased from-the-start
/// discounting, so the estimator's expectation is the exact gradient.
pub fn gradient_cosine_accuracy(
    spec: &GridworldSpec,
    gamma: f64,
    params: &PolicyParams,
    task: usize,
    board_width: usize,
    sample_sizes: &[usize],
    repeats: usize,
    seed: u64,
) -> Result<Vec<CosinePoint>, PolicyError> {
    if sample_sizes.is_empty() || sample_sizes[0] == 0 {
        return Err(PolicyError::DimensionMismatch(
            "sample sizes must be positive".into(),
        ));
    }
    let mut sizes = sample_sizes.to_vec();
    sizes.sort_unstable();
    sizes.dedup();
    let max_n = *sizes.last().unwrap();

    let mdp = to_tabular(spec, gamma);
    let exact = exact_policy_gradient(&mdp, params, task, spec.max_steps, board_width)?;
    if exact.iter().all(|&g| g == 0.0) {
        return Err(PolicyError::ZeroExactGradient);
    }
    let table = PolicyTable::build(params)?;

    let mut sums = vec![0.0; sizes.len()];
    for repeat in 0..repeats {
        let mut acc = vec![0.0; params.n_params()];
        let mut size_idx = 0;
        for episode in 0..max_n {
            let mut rng = stream(
                seed,
                Purpose::CosineRollout,
                (task * repeats + repeat) as u64,
                episode as u64,
            );
            let traj = rollout_episode(&table, spec, task, board_width, &mut rng);
            let togo = returns_to_go(&traj, gamma);
            let mut discount = 1.0;
            for (step, &g) in traj.steps.iter().zip(&togo) {
                params.accumulate_log_prob_grad_cached(
                    &table,
                    state_index(board_width, step.state),
                    task,
                    step.action.index(),
                    discount * g,
                    &mut acc,
                );
                discount *= gamma;
            }
            while size_idx < sizes.len() && episode + 1 == sizes[size_idx] {
                sums[size_idx] += cosine(&acc, &exact);
                size_idx += 1;
            }
        }
    }
    Ok(sizes
        .into_iter()
        .zip(sums)
        .map(|(n_episodes, total)| CosinePoint {
            n_episodes,
            cosine: total / repeats as f64,
        })
        .collect())
}

//! Property tests for the spec'd invariants: simplex geometry, gap
//! normalization, sampler state machines, and advantage normalization.

use proptest::prelude::*;
use rand::Rng as _;

use tasklab::envs::{build_gridworld_suite, step, Action, SuiteParams};
use tasklab::gap::normalized_gap;
use tasklab::policy::{per_task_advantage_normalize, PolicyTable};
use tasklab::rng::{sample_categorical, stream, Purpose};
use tasklab::samplers::{
    hard_first_update, HardFirstConfig, HardFirstState, SamplerObservation,
};
use tasklab::simplex::{
    geometric_mean_update, kl_divergence, kl_projection_min_prob, mirror_ascent_step,
    softmax_best_response, GapVector, TaskDistribution,
};

fn distribution_strategy(k: usize) -> impl Strategy<Value = TaskDistribution> {
    prop::collection::vec(0.05f64..1.0, k)
        .prop_map(|w| TaskDistribution::from_weights(w).unwrap())
}

fn gaps_strategy(k: usize) -> impl Strategy<Value = GapVector> {
    prop::collection::vec(0.0f64..=1.0, k).prop_map(|g| GapVector::normalized(g).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn simplex_ops_return_valid_distributions(
        k in 2usize..=8,
        seed in any::<u64>(),
        eta in 0.5f64..32.0,
        mix in 0.01f64..=1.0,
        eps_frac in 0.05f64..0.9,
    ) {
        let mut rng = stream(seed, Purpose::GameInit, 90, 0);
        let q = {
            let w: Vec<f64> = (0..k).map(|_| rng.gen_range(0.05..1.0)).collect();
            TaskDistribution::from_weights(w).unwrap()
        };
        let g = {
            let v: Vec<f64> = (0..k).map(|_| rng.gen_range(0.0..1.0)).collect();
            GapVector::normalized(v).unwrap()
        };
        let p0 = TaskDistribution::uniform(k).unwrap();
        let alpha = mix * eta;
        let eps = eps_frac / k as f64;

        for dist in [
            softmax_best_response(&g, eta).unwrap(),
            mirror_ascent_step(&q, &g, eta, alpha, &p0).unwrap(),
            geometric_mean_update(&q, &p0, mix).unwrap(),
            kl_projection_min_prob(&q, eps).unwrap(),
        ] {
            let sum: f64 = dist.probs().iter().sum();
            prop_assert!((sum - 1.0).abs() < 1e-9);
            prop_assert!(dist.probs().iter().all(|&p| p >= 0.0 && p.is_finite()));
        }
    }

    #[test]
    fn mirror_step_equals_geometric_mean_route(
        k in 2usize..=8,
        seed in any::<u64>(),
        eta in 0.5f64..32.0,
        mix in 0.001f64..=1.0,
    ) {
        let mut rng = stream(seed, Purpose::GameInit, 91, 0);
        let w: Vec<f64> = (0..k).map(|_| rng.gen_range(0.05..1.0)).collect();
        let q = TaskDistribution::from_weights(w).unwrap();
        let v: Vec<f64> = (0..k).map(|_| rng.gen_range(0.0..1.0)).collect();
        let g = GapVector::normalized(v).unwrap();
        let p0 = TaskDistribution::uniform(k).unwrap();
        let alpha = mix * eta;
        let stepped = mirror_ascent_step(&q, &g, eta, alpha, &p0).unwrap();
        let mixed = geometric_mean_update(&q, &softmax_best_response(&g, eta).unwrap(), mix).unwrap();
        for i in 0..k {
            prop_assert!((stepped.get(i) - mixed.get(i)).abs() < 1e-12);
        }
    }

    #[test]
    fn softmax_is_shift_invariant(
        k in 2usize..=6,
        seed in any::<u64>(),
        eta in 0.5f64..16.0,
        shift in 0.0f64..0.5,
    ) {
        let mut rng = stream(seed, Purpose::GameInit, 92, 0);
        let v: Vec<f64> = (0..k).map(|_| rng.gen_range(0.0..0.5)).collect();
        let shifted: Vec<f64> = v.iter().map(|&x| x + shift).collect();
        let a = softmax_best_response(&GapVector::normalized(v).unwrap(), eta).unwrap();
        let b = softmax_best_response(&GapVector::normalized(shifted).unwrap(), eta).unwrap();
        for i in 0..k {
            prop_assert!((a.get(i) - b.get(i)).abs() < 1e-12);
        }
    }

    #[test]
    fn sharpness_is_monotone_in_eta(
        k in 2usize..=6,
        seed in any::<u64>(),
    ) {
        let mut rng = stream(seed, Purpose::GameInit, 93, 0);
        let mut v: Vec<f64> = (0..k).map(|_| rng.gen_range(0.0..0.8)).collect();
        let star = rng.gen_range(0..k);
        v[star] = 0.9 + rng.gen_range(0.0..0.1); // unique maximizer
        let g = GapVector::normalized(v).unwrap();
        let mut last = 0.0;
        for eta in [0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0] {
            let q = softmax_best_response(&g, eta).unwrap();
            prop_assert!(q.get(star) >= last - 1e-12);
            last = q.get(star);
        }
        let extreme = softmax_best_response(&g, 700.0).unwrap();
        prop_assert!(extreme.get(star) > 1.0 - 1e-6);
    }

    #[test]
    fn projection_respects_floor_and_kl_optimality(
        k in 2usize..=5,
        seed in any::<u64>(),
        eps_frac in 0.05f64..0.9,
    ) {
        let mut rng = stream(seed, Purpose::GameInit, 94, 0);
        let w: Vec<f64> = (0..k).map(|_| rng.gen_range(0.01..1.0)).collect();
        let q_hat = TaskDistribution::from_weights(w).unwrap();
        let eps = eps_frac / k as f64;
        let ours = kl_projection_min_prob(&q_hat, eps).unwrap();
        prop_assert!(ours.probs().iter().all(|&p| p >= eps - 1e-12));
        let oracle = tasklab::oracles::clamp_subset_oracle(q_hat.probs(), eps);
        let oracle = TaskDistribution::new(oracle).unwrap();
        let ours_kl = kl_divergence(&ours, &q_hat);
        let oracle_kl = kl_divergence(&oracle, &q_hat);
        prop_assert!(ours_kl <= oracle_kl + 1e-9, "{ours_kl} vs {oracle_kl}");
    }

    #[test]
    fn mirror_step_lower_bound_holds(
        k in 2usize..=6,
        seed in any::<u64>(),
        eta in 0.5f64..16.0,
        mix in 0.01f64..=1.0,
    ) {
        let mut rng = stream(seed, Purpose::GameInit, 95, 0);
        let w: Vec<f64> = (0..k).map(|_| rng.gen_range(0.05..1.0)).collect();
        let q = TaskDistribution::from_weights(w).unwrap();
        let v: Vec<f64> = (0..k).map(|_| rng.gen_range(0.0..1.0)).collect();
        let g = GapVector::normalized(v).unwrap();
        let p0 = TaskDistribution::uniform(k).unwrap();
        let q_star = softmax_best_response(&g, eta).unwrap();
        let out = mirror_ascent_step(&q, &g, eta, mix * eta, &p0).unwrap();
        for i in 0..k {
            let bound = q.get(i).min(q_star.get(i));
            prop_assert!(out.get(i) >= bound * (1.0 - 1e-12));
        }
        // The e^{-eta M}/k floor is inductive: it holds for the output
        // whenever the input already satisfies it (true from uniform init).
        let floor = (-eta).exp() / k as f64; // M = 1
        if q.probs().iter().all(|&p| p >= floor) {
            for i in 0..k {
                prop_assert!(out.get(i) >= floor * (1.0 - 1e-12));
            }
        }
    }

    #[test]
    fn normalized_gap_stays_in_range_and_monotone(
        j_ref in -1.0f64..1.0,
        span in 0.01f64..2.0,
        a in -3.0f64..3.0,
        b in -3.0f64..3.0,
    ) {
        let j_rand = j_ref - span;
        let lo = normalized_gap(j_ref, a.max(b), j_rand).unwrap();
        let hi = normalized_gap(j_ref, a.min(b), j_rand).unwrap();
        prop_assert!((0.0..=1.0).contains(&lo));
        prop_assert!((0.0..=1.0).contains(&hi));
        prop_assert!(hi >= lo);
    }

    #[test]
    fn hard_first_partition_invariant_under_random_observations(
        seed in any::<u64>(),
        steps in 1usize..30,
    ) {
        let k = 5;
        let mut state = HardFirstState::new(
            k,
            HardFirstConfig {
                active_set_size: 2,
                b1_fraction: 0.8,
                unsolvable_thresholds: vec![0.05; k],
                solved_thresholds: vec![0.8; k],
                per_task_step_budget: 500,
            },
        )
        .unwrap();
        let mut rng = stream(seed, Purpose::GameInit, 96, 0);
        for it in 0..steps {
            let returns: Vec<f64> = (0..k).map(|_| rng.gen_range(-0.015..1.0)).collect();
            let obs = SamplerObservation {
                gaps: GapVector::normalized(vec![0.5; k]).unwrap(),
                return_means: returns,
                prev_return_means: vec![0.0; k],
                success_rates: vec![0.0; k],
                value_loss_scores: None,
                return_scales: vec![1.0; k],
                env_steps_elapsed: (it as u64 + 1) * 300,
                env_steps_per_task: vec![60; k],
                total_budget: 10_000,
            };
            let q = hard_first_update(&mut state, &obs, 0.02).unwrap();
            prop_assert!(state.partition_invariant_holds());
            prop_assert!(q.probs().iter().all(|&p| p >= 0.02 - 1e-12));
        }
    }

    #[test]
    fn per_task_normalization_standardizes_and_is_scale_invariant(
        seed in any::<u64>(),
        scale in 0.1f64..50.0,
    ) {
        let mut rng = stream(seed, Purpose::GameInit, 97, 0);
        let raw: Vec<Vec<f64>> = (0..6)
            .map(|_| (0..rng.gen_range(2..8)).map(|_| rng.gen_range(-2.0..2.0)).collect())
            .collect();
        let tasks: Vec<usize> = (0..6).map(|i| i % 2).collect();
        let normalized = per_task_advantage_normalize(&raw, &tasks, 2);
        for task in 0..2 {
            let values: Vec<f64> = normalized
                .per_trajectory
                .iter()
                .zip(&tasks)
                .filter(|(_, &t)| t == task)
                .flat_map(|(row, _)| row.iter().copied())
                .collect();
            let mean: f64 = values.iter().sum::<f64>() / values.len() as f64;
            let std = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>()
                / values.len() as f64)
                .sqrt();
            prop_assert!(mean.abs() < 1e-6);
            if std > 0.0 {
                prop_assert!((std - 1.0).abs() < 1e-6);
            }
        }
        // Uniform positive rescaling of the raw advantages is absorbed.
        let scaled: Vec<Vec<f64>> = raw
            .iter()
            .map(|row| row.iter().map(|&a| a * scale).collect())
            .collect();
        let renormalized = per_task_advantage_normalize(&scaled, &tasks, 2);
        // The 1e-8 guard in the divisor does not scale, so invariance is
        // exact only up to ~1e-8/std per unit of normalized advantage.
        for (a, b) in normalized
            .per_trajectory
            .iter()
            .flatten()
            .zip(renormalized.per_trajectory.iter().flatten())
        {
            prop_assert!((a - b).abs() < 1e-4);
        }
    }

    #[test]
    fn episode_returns_stay_in_reward_bounds(
        seed in any::<u64>(),
        len in 1usize..=12,
    ) {
        let params = SuiteParams::default();
        let spec = &build_gridworld_suite(&[len], &params).unwrap()[0];
        let mut rng = stream(seed, Purpose::Rollout, 98, 0);
        let mut state = spec.start;
        let mut total = 0.0;
        for i in 0..spec.max_steps {
            let a = Action::from_index(sample_categorical(&[0.25; 4], &mut rng));
            let out = step(spec, state, a, i);
            total += out.reward;
            state = out.next;
            if out.terminated || out.truncated {
                break;
            }
        }
        prop_assert!((-0.015 - 1e-12..=1.0 + 1e-12).contains(&total), "return {total}");
    }
}

/// Resampling from q and uniform-sampling with k*q_i advantage weights have
/// the same expected surrogate gradient on a frozen policy and frozen q.
#[test]
fn reweighting_matches_resampling_in_expectation() {
    use tasklab::envs::GridworldSuite;
    use tasklab::harness::apply_objective_weights;
    use tasklab::policy::{
        reinforce_gradient, returns_to_go, rollout_episode, AdvantageBatch, Architecture,
        PolicyParams,
    };

    let params_suite = SuiteParams::default();
    let suite = GridworldSuite {
        gamma: 0.99,
        tasks: build_gridworld_suite(&[2, 3], &params_suite).unwrap(),
    };
    let width = suite.tasks[0].width;
    let n_cells = suite.tasks[0].n_cells();
    let mut rng = stream(77, Purpose::PolicyInit, 0, 0);
    let mut params = PolicyParams::init(Architecture::SeparateTabular, n_cells, 2, 4, &mut rng);
    for w in params.weights_mut().iter_mut() {
        *w = rng.gen_range(-0.3..0.3);
    }
    let table = PolicyTable::build(&params).unwrap();
    let q = [0.8, 0.2];

    let batches = 120_000usize;
    let episodes_per_batch = 4usize;
    let dim = params.n_params();
    let mut sum_res = vec![0.0; dim];
    let mut sum_sq_res = vec![0.0; dim];
    let mut sum_rw = vec![0.0; dim];
    let mut sum_sq_rw = vec![0.0; dim];

    let advantages_of = |batch: &[tasklab::envs::Trajectory]| AdvantageBatch {
        per_trajectory: batch.iter().map(|t| returns_to_go(t, 0.99)).collect(),
        stats: vec![],
    };

    for b in 0..batches {
        // Resampled batch: tasks drawn from q.
        let mut batch = Vec::with_capacity(episodes_per_batch);
        for e in 0..episodes_per_batch {
            let mut draw = stream(78, Purpose::TaskDraw, b as u64, e as u64);
            let task = sample_categorical(&q, &mut draw);
            let mut ep = stream(78, Purpose::Rollout, b as u64, e as u64);
            batch.push(rollout_episode(&table, &suite.tasks[task], task, width, &mut ep));
        }
        let adv = advantages_of(&batch);
        let g = reinforce_gradient(&params, &table, &batch, &adv, width, 0.0).unwrap();
        for j in 0..dim {
            sum_res[j] += g[j];
            sum_sq_res[j] += g[j] * g[j];
        }

        // Reweighted batch: tasks drawn uniformly, advantages scaled k*q_i.
        let mut batch = Vec::with_capacity(episodes_per_batch);
        for e in 0..episodes_per_batch {
            let mut draw = stream(79, Purpose::TaskDraw, b as u64, e as u64);
            let task = sample_categorical(&[0.5, 0.5], &mut draw);
            let mut ep = stream(79, Purpose::Rollout, b as u64, e as u64);
            batch.push(rollout_episode(&table, &suite.tasks[task], task, width, &mut ep));
        }
        let tasks: Vec<usize> = batch.iter().map(|t| t.task).collect();
        let mut adv = advantages_of(&batch);
        apply_objective_weights(&mut adv, &tasks, &q).unwrap();
        let g = reinforce_gradient(&params, &table, &batch, &adv, width, 0.0).unwrap();
        for j in 0..dim {
            sum_rw[j] += g[j];
            sum_sq_rw[j] += g[j] * g[j];
        }
    }

    let n = batches as f64;
    let mut checked = 0;
    for j in 0..dim {
        let mean_res = sum_res[j] / n;
        let mean_rw = sum_rw[j] / n;
        let var_res = (sum_sq_res[j] / n - mean_res * mean_res).max(0.0);
        let var_rw = (sum_sq_rw[j] / n - mean_rw * mean_rw).max(0.0);
        let sigma = ((var_res + var_rw) / n).sqrt();
        if sigma > 0.0 {
            checked += 1;
            assert!(
                (mean_res - mean_rw).abs() <= 3.0 * sigma,
                "coordinate {j}: resampled {mean_res:.6} vs reweighted {mean_rw:.6} (sigma {sigma:.2e})"
            );
        }
    }
    assert!(checked > 0, "no informative coordinates");
}

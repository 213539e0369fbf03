//! Independent verification oracles.
//!
//! Everything here deliberately avoids the code paths it checks: the KL
//! projection is re-solved by Euclidean projected gradient descent and by
//! exhaustive clamp-subset enumeration, gradients are re-derived by central
//! finite differences, and the convergence guarantee is checked against a
//! dense grid search. The reports double as the CLI `oracle` subcommand and
//! the acceptance suite's heavy checks.

use rand::Rng;

use crate::envs::{to_tabular, GridworldSpec, GridworldSuite, TabularMdp};
use crate::harness::{
    ogd_regret_constant, synthetic_convergence_experiment, CappedQuadraticGame,
};
use crate::policy::{
    exact_policy_gradient, gradient_cosine_accuracy, mdp_policy, reinforce_gradient,
    surrogate_value, Architecture, CosinePoint, PolicyParams, PolicyTable,
};
use crate::rng::{stream, Purpose};
use crate::simplex::{
    geometric_mean_update, kl_divergence, kl_projection_min_prob, mirror_ascent_step,
    softmax_best_response, GapVector, TaskDistribution,
};

/// Outcome of one oracle suite.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub name: &'static str,
    pub checks: Vec<OracleCheck>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleCheck {
    pub label: String,
    pub passed: bool,
    pub detail: String,
}

impl OracleReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for check in &self.checks {
            out.push_str(&format!(
                "[{}] {} — {} ({})\n",
                if check.passed { "pass" } else { "FAIL" },
                self.name,
                check.label,
                check.detail
            ));
        }
        out
    }
}

/// Euclidean projection onto `{q : q_i >= eps, sum q = 1}` by water-filling
/// over the shifted simplex.
pub fn euclidean_floor_projection(v: &[f64], eps: f64) -> Vec<f64> {
    let k = v.len();
    let mass = 1.0 - eps * k as f64;
    debug_assert!(mass > 0.0);
    // Project v - eps onto the simplex of total mass `mass`.
    let shifted: Vec<f64> = v.iter().map(|&x| x - eps).collect();
    let mut sorted = shifted.clone();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut acc = 0.0;
    let mut theta = 0.0;
    for (i, &u) in sorted.iter().enumerate() {
        acc += u;
        let candidate = (acc - mass) / (i + 1) as f64;
        if u - candidate > 0.0 {
            theta = candidate;
        }
    }
    shifted
        .into_iter()
        .map(|x| (x - theta).max(0.0) + eps)
        .collect()
}

/// Solves `argmin KL(q || q_hat) s.t. q >= eps` by projected gradient
/// descent with a decaying step. Independent of the clamp-and-rescale
/// implementation path.
pub fn projected_gradient_kl_oracle(q_hat: &[f64], eps: f64, iterations: usize) -> Vec<f64> {
    let k = q_hat.len();
    let mut q = vec![1.0 / k as f64; k];
    for t in 0..iterations {
        let step = 0.5 / (1.0 + t as f64 / 50.0);
        let grad: Vec<f64> = q
            .iter()
            .zip(q_hat)
            .map(|(&qi, &pi)| (qi / pi.max(1e-300)).ln() + 1.0)
            .collect();
        let moved: Vec<f64> = q.iter().zip(&grad).map(|(&qi, &g)| qi - step * g).collect();
        q = euclidean_floor_projection(&moved, eps);
    }
    q
}

/// Exact minimizer by enumerating every subset of floor-clamped
/// coordinates and keeping the KL-smallest feasible candidate. Exponential
/// in k; fine for the small instances the checks use.
pub fn clamp_subset_oracle(q_hat: &[f64], eps: f64) -> Vec<f64> {
    let k = q_hat.len();
    assert!(k <= 20);
    let mut best: Option<(f64, Vec<f64>)> = None;
    let hat = TaskDistribution::new(q_hat.to_vec()).expect("valid input distribution");
    for mask in 0u32..(1 << k) {
        let clamped: Vec<bool> = (0..k).map(|i| mask & (1 << i) != 0).collect();
        let clamped_mass = eps * clamped.iter().filter(|&&c| c).count() as f64;
        let free_mass: f64 = q_hat
            .iter()
            .zip(&clamped)
            .filter(|(_, &c)| !c)
            .map(|(&p, _)| p)
            .sum();
        if 1.0 - clamped_mass <= 0.0 || free_mass <= 0.0 {
            continue;
        }
        let scale = (1.0 - clamped_mass) / free_mass;
        let candidate: Vec<f64> = q_hat
            .iter()
            .zip(&clamped)
            .map(|(&p, &c)| if c { eps } else { p * scale })
            .collect();
        if candidate.iter().any(|&x| x < eps - 1e-12) {
            continue;
        }
        let q = match TaskDistribution::new(candidate.clone()) {
            Ok(q) => q,
            Err(_) => continue,
        };
        let value = kl_divergence(&q, &hat);
        if best.as_ref().map_or(true, |(b, _)| value < *b) {
            best = Some((value, candidate));
        }
    }
    best.expect("feasible clamp subset exists").1
}

fn random_distribution<R: Rng>(k: usize, rng: &mut R) -> TaskDistribution {
    let weights: Vec<f64> = (0..k).map(|_| rng.gen_range(0.05..1.0)).collect();
    TaskDistribution::from_weights(weights).unwrap()
}

/// Simplex oracle suite: the mirror step against its geometric-mean closed
/// form on random instances, and the floor projection against the convex
/// oracle.
pub fn simplex_oracle_report(
    equivalence_instances: usize,
    projection_instances: usize,
    seed: u64,
) -> OracleReport {
    let mut checks = Vec::new();

    // Mirror-ascent step vs weighted-geometric-mean route, 1e-12 per
    // coordinate.
    let mut worst = 0.0f64;
    for i in 0..equivalence_instances {
        let mut rng = stream(seed, Purpose::GameInit, 1, i as u64);
        let k = rng.gen_range(2..=8);
        let q = random_distribution(k, &mut rng);
        let gaps: Vec<f64> = (0..k).map(|_| rng.gen_range(0.0..1.0)).collect();
        let gaps = GapVector::normalized(gaps).unwrap();
        let eta = rng.gen_range(0.5..32.0);
        let alpha = rng.gen_range(0.0..1.0f64).max(1e-6) * eta;
        let p0 = TaskDistribution::uniform(k).unwrap();
        let stepped = mirror_ascent_step(&q, &gaps, eta, alpha, &p0).unwrap();
        let best = softmax_best_response(&gaps, eta).unwrap();
        let mixed = geometric_mean_update(&q, &best, alpha / eta).unwrap();
        for j in 0..k {
            worst = worst.max((stepped.get(j) - mixed.get(j)).abs());
        }
    }
    checks.push(OracleCheck {
        label: format!("mirror step = geometric mean on {equivalence_instances} instances"),
        passed: worst < 1e-12,
        detail: format!("max coordinate gap {worst:.3e}, tolerance 1e-12"),
    });

    // Floor projection vs projected-gradient and subset-enumeration
    // oracles, within 1e-6 in KL objective value.
    let mut worst_gap = 0.0f64;
    let mut worst_floor: f64 = f64::INFINITY;
    for i in 0..projection_instances {
        let mut rng = stream(seed, Purpose::GameInit, 2, i as u64);
        let k = rng.gen_range(2..=5);
        let q_hat = random_distribution(k, &mut rng);
        let eps = rng.gen_range(0.01..0.9 / k as f64);
        let ours = kl_projection_min_prob(&q_hat, eps).unwrap();
        worst_floor = worst_floor.min(
            ours.probs()
                .iter()
                .fold(f64::INFINITY, |acc, &p| acc.min(p - eps)),
        );
        let ours_kl = kl_divergence(&ours, &q_hat);

        let pgd = projected_gradient_kl_oracle(q_hat.probs(), eps, 4000);
        let pgd_kl = kl_divergence(&TaskDistribution::new(pgd).unwrap(), &q_hat);
        let subset = clamp_subset_oracle(q_hat.probs(), eps);
        let subset_kl = kl_divergence(&TaskDistribution::new(subset).unwrap(), &q_hat);

        let reference = pgd_kl.min(subset_kl);
        worst_gap = worst_gap.max(ours_kl - reference);
    }
    checks.push(OracleCheck {
        label: format!("floor projection vs convex oracles on {projection_instances} instances"),
        passed: worst_gap < 1e-6 && worst_floor > -1e-12,
        detail: format!(
            "max KL excess over oracle {worst_gap:.3e} (tol 1e-6), min floor slack {worst_floor:.3e}"
        ),
    });

    OracleReport {
        name: "simplex",
        checks,
    }
}

fn random_walled_spec<R: Rng>(rng: &mut R, id: usize) -> GridworldSpec {
    use crate::envs::Cell;
    use std::collections::BTreeSet;
    loop {
        let width = rng.gen_range(3..=4);
        let height = rng.gen_range(3..=4);
        let start = Cell::new(rng.gen_range(0..height), rng.gen_range(0..width));
        let goal = Cell::new(rng.gen_range(0..height), rng.gen_range(0..width));
        let mut walls = BTreeSet::new();
        for r in 0..height {
            for c in 0..width {
                let cell = Cell::new(r, c);
                if cell != start && cell != goal && rng.gen_bool(0.15) {
                    walls.insert(cell);
                }
            }
        }
        if let Ok(spec) = GridworldSpec::new(
            format!("rand-{id}"),
            width,
            height,
            walls,
            start,
            goal,
            -0.001,
            1.0,
            10,
        ) {
            return spec;
        }
    }
}

/// Gradient oracle suite: the REINFORCE gradient against central
/// differences of the surrogate, and the exact dynamic-programming gradient
/// against central differences of the exact return.
pub fn gradient_oracle_report(
    surrogate_instances: usize,
    exact_instances: usize,
    seed: u64,
) -> OracleReport {
    let mut checks = Vec::new();

    // Analytic surrogate gradient vs central differences (h = 1e-5),
    // max relative coordinate error below 1e-4.
    let mut worst_rel = 0.0f64;
    for i in 0..surrogate_instances {
        let mut rng = stream(seed, Purpose::GameInit, 3, i as u64);
        let spec = random_walled_spec(&mut rng, i);
        let n_cells = spec.n_cells();
        let n_tasks = rng.gen_range(1..=2);
        let arch = if rng.gen_bool(0.5) {
            Architecture::SharedMlp {
                hidden: rng.gen_range(4..=8),
            }
        } else {
            Architecture::SeparateTabular
        };
        let mut params = PolicyParams::init(arch, n_cells, n_tasks, 4, &mut rng);
        for w in params.weights_mut().iter_mut() {
            *w = rng.gen_range(-0.4..0.4);
        }
        let table = PolicyTable::build(&params).unwrap();
        let batch: Vec<_> = (0..5)
            .map(|e| {
                crate::policy::rollout_episode(
                    &table,
                    &spec,
                    e % n_tasks,
                    spec.width,
                    &mut stream(seed, Purpose::Rollout, i as u64, e as u64),
                )
            })
            .collect();
        let raw: Vec<Vec<f64>> = batch
            .iter()
            .map(|t| crate::policy::returns_to_go(t, 0.99))
            .collect();
        let tasks: Vec<usize> = batch.iter().map(|t| t.task).collect();
        let advantages = crate::policy::per_task_advantage_normalize(&raw, &tasks, n_tasks);
        let grad =
            reinforce_gradient(&params, &table, &batch, &advantages, spec.width, 0.0).unwrap();
        let h = 1e-5;
        let mut probe = params.clone();
        for j in 0..params.n_params() {
            let w0 = params.weights()[j];
            probe.weights_mut()[j] = w0 + h;
            let up = surrogate_value(&probe, &batch, &advantages, spec.width, 0.0).unwrap();
            probe.weights_mut()[j] = w0 - h;
            let down = surrogate_value(&probe, &batch, &advantages, spec.width, 0.0).unwrap();
            probe.weights_mut()[j] = w0;
            let fd = (up - down) / (2.0 * h);
            let denom = grad[j].abs().max(fd.abs()).max(1e-4);
            worst_rel = worst_rel.max((grad[j] - fd).abs() / denom);
        }
    }
    checks.push(OracleCheck {
        label: format!("surrogate gradient vs central differences on {surrogate_instances} instances"),
        passed: worst_rel < 1e-4,
        detail: format!("max relative error {worst_rel:.3e}, tolerance 1e-4"),
    });

    // Exact DP gradient vs central differences of the exact return
    // (h = 1e-4), norm-relative error below 1e-6.
    let mut worst_exact = 0.0f64;
    for i in 0..exact_instances {
        let mut rng = stream(seed, Purpose::GameInit, 4, i as u64);
        let spec = random_walled_spec(&mut rng, 1000 + i);
        let mdp = to_tabular(&spec, 0.99);
        let mut params =
            PolicyParams::init(Architecture::SeparateTabular, spec.n_cells(), 1, 4, &mut rng);
        for w in params.weights_mut().iter_mut() {
            *w = rng.gen_range(-0.5..0.5);
        }
        let grad = exact_policy_gradient(&mdp, &params, 0, spec.max_steps, spec.width).unwrap();
        let rel = fd_exact_return_relative_error(&mdp, &params, 0, spec.max_steps, spec.width, &grad);
        worst_exact = worst_exact.max(rel);
    }
    checks.push(OracleCheck {
        label: format!("exact gradient vs finite differences on {exact_instances} boards"),
        passed: worst_exact < 1e-6,
        detail: format!("max norm-relative error {worst_exact:.3e}, tolerance 1e-6"),
    });

    OracleReport {
        name: "gradient",
        checks,
    }
}

fn fd_exact_return_relative_error(
    mdp: &TabularMdp,
    params: &PolicyParams,
    task: usize,
    horizon: usize,
    board_width: usize,
    grad: &[f64],
) -> f64 {
    let h = 1e-4;
    let mut probe = params.clone();
    let mut num = 0.0;
    let mut den = 0.0;
    for j in 0..params.n_params() {
        let w0 = params.weights()[j];
        probe.weights_mut()[j] = w0 + h;
        let up = crate::envs::exact_return(
            mdp,
            &mdp_policy(mdp, &probe, task, board_width).unwrap(),
            horizon,
        );
        probe.weights_mut()[j] = w0 - h;
        let down = crate::envs::exact_return(
            mdp,
            &mdp_policy(mdp, &probe, task, board_width).unwrap(),
            horizon,
        );
        probe.weights_mut()[j] = w0;
        let fd = (up - down) / (2.0 * h);
        num += (grad[j] - fd).powi(2);
        den += fd.powi(2);
    }
    (num / den.max(1e-300)).sqrt()
}

/// Convergence oracle suite: the theorem's guarantee on the three-task
/// capped-quadratic game, every seed.
pub fn convergence_oracle_report(n_seeds: u64, epsilon: f64) -> OracleReport {
    let game = CappedQuadraticGame::new(vec![-1.0, 0.0, 1.0], -2.0, 2.0, 9.0).unwrap();
    let c = ogd_regret_constant(&game);
    let mut all_hold = true;
    let mut details = Vec::new();
    for seed in 0..n_seeds {
        let report = synthetic_convergence_experiment(&game, epsilon, c, seed).unwrap();
        if !report.bound_holds {
            all_hold = false;
        }
        details.push(format!(
            "seed {seed}: avg worst gap {:.4} vs minmax {:.4} + eps {:.2} [{}]",
            report.averaged_worst_gap,
            report.min_max_value,
            epsilon,
            if report.bound_holds { "ok" } else { "VIOLATED" }
        ));
    }
    OracleReport {
        name: "convergence",
        checks: vec![OracleCheck {
            label: format!("guarantee holds on {n_seeds}/{n_seeds} seeds of the 3-task game"),
            passed: all_hold,
            detail: details.join("; "),
        }],
    }
}

/// Per-task gradient-accuracy curves under a uniform policy on a suite.
pub fn cosine_study(
    suite: &GridworldSuite,
    sample_sizes: &[usize],
    repeats: usize,
    seed: u64,
) -> Vec<(String, Vec<CosinePoint>)> {
    suite
        .tasks
        .iter()
        .enumerate()
        .map(|(task, spec)| {
            let mut rng = stream(seed, Purpose::PolicyInit, 40, task as u64);
            let params = PolicyParams::init(
                Architecture::SeparateTabular,
                spec.n_cells(),
                1,
                4,
                &mut rng,
            );
            let curve = gradient_cosine_accuracy(
                spec,
                suite.gamma,
                &params,
                0,
                spec.width,
                sample_sizes,
                repeats,
                seed,
            )
            .expect("uniform policy has a nonzero exact gradient");
            (spec.name.clone(), curve)
        })
        .collect()
}

/// Smallest sample size whose averaged cosine reaches the threshold.
pub fn samples_to_cosine(curve: &[CosinePoint], threshold: f64) -> Option<usize> {
    curve
        .iter()
        .find(|p| p.cosine >= threshold)
        .map(|p| p.n_episodes)
}

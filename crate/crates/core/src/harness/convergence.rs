//! Empirical check of the sampler's convergence guarantee on synthetic
//! games.
//!
//! The game is a two-player loop: a sampling player runs mirror ascent over
//! task weights while a parameter player runs projected online gradient
//! descent over a 1-D box against convex per-task gap functions. With the
//! schedule from [`theory_schedule`] the averaged worst-task gap must land
//! within `epsilon` of the game's minimax value, which a dense grid search
//! computes independently.

use rand::Rng;

use crate::rng::{stream, Purpose};
use crate::simplex::{mirror_ascent_step, GapVector, TaskDistribution};

use super::schedule::{theory_schedule, TheorySchedule};
use super::HarnessError;

/// Per-task gaps `g_i(theta) = min(cap, (theta - c_i)^2)` on a box.
///
/// With `cap` at or above the largest boundary value the cap never binds
/// and each gap is convex on the box; a smaller cap flattens the tails and
/// breaks convexity, which the experiment reports as a warning.
#[derive(Debug, Clone, PartialEq)]
pub struct CappedQuadraticGame {
    pub centers: Vec<f64>,
    pub lower: f64,
    pub upper: f64,
    pub cap: f64,
}

impl CappedQuadraticGame {
    pub fn new(centers: Vec<f64>, lower: f64, upper: f64, cap: f64) -> Result<Self, HarnessError> {
        if centers.is_empty() {
            return Err(HarnessError::BadConfig("game needs at least one task".into()));
        }
        if !(upper > lower) {
            return Err(HarnessError::BadConfig(format!(
                "degenerate box [{lower}, {upper}]"
            )));
        }
        if !(cap > 0.0) {
            return Err(HarnessError::BadConfig(format!("cap {cap} must be positive")));
        }
        Ok(Self {
            centers,
            lower,
            upper,
            cap,
        })
    }

    pub fn n_tasks(&self) -> usize {
        self.centers.len()
    }

    pub fn gaps(&self, theta: f64) -> Vec<f64> {
        self.centers
            .iter()
            .map(|&c| ((theta - c) * (theta - c)).min(self.cap))
            .collect()
    }

    /// Subgradients of the gaps; zero where the cap binds.
    pub fn subgradients(&self, theta: f64) -> Vec<f64> {
        self.centers
            .iter()
            .map(|&c| {
                if (theta - c) * (theta - c) >= self.cap {
                    0.0
                } else {
                    2.0 * (theta - c)
                }
            })
            .collect()
    }

    /// True when every gap is convex over the box (cap never binds).
    pub fn is_convex_on_box(&self) -> bool {
        self.centers.iter().all(|&c| {
            let worst = (self.lower - c).powi(2).max((self.upper - c).powi(2));
            worst <= self.cap
        })
    }

    /// Bound on the subgradient magnitudes over the box.
    pub fn lipschitz_constant(&self) -> f64 {
        self.centers
            .iter()
            .map(|&c| 2.0 * (self.lower - c).abs().max((self.upper - c).abs()))
            .fold(0.0, f64::max)
    }
}

/// Regret constant for the projected OGD player with step `D / (L sqrt(t))`:
/// `C = 1.5 * D * L`.
pub fn ogd_regret_constant(game: &CappedQuadraticGame) -> f64 {
    1.5 * (game.upper - game.lower) * game.lipschitz_constant()
}

/// `min over theta of max_i g_i(theta)` by dense grid search.
pub fn grid_search_min_max(game: &CappedQuadraticGame, resolution: f64) -> f64 {
    assert!(resolution > 0.0);
    let steps = ((game.upper - game.lower) / resolution).ceil() as usize;
    let mut best = f64::INFINITY;
    for i in 0..=steps {
        let theta = (game.lower + i as f64 * resolution).min(game.upper);
        let worst = game
            .gaps(theta)
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max);
        best = best.min(worst);
    }
    best
}

/// Outcome of one synthetic convergence run.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    /// The schedule used; absent for single-task games, which have no
    /// sampling player.
    pub schedule: Option<TheorySchedule>,
    pub rounds: u64,
    /// `max_i (1/T) sum_t g_i(theta_t)`.
    pub averaged_worst_gap: f64,
    /// Grid-search minimax value at 1e-4 resolution.
    pub min_max_value: f64,
    pub epsilon: f64,
    /// Whether the guarantee `averaged_worst_gap <= min_max + epsilon` held.
    pub bound_holds: bool,
    /// Set when a gap function is not convex on the box; the guarantee is
    /// then vacuous but the loop still runs.
    pub convexity_warning: bool,
    pub final_q: Vec<f64>,
    pub mean_q: Vec<f64>,
}

/// Runs the two-player loop for `T_min` rounds under the theoretical
/// schedule and checks the guarantee against the grid-search oracle.
pub fn synthetic_convergence_experiment(
    game: &CappedQuadraticGame,
    epsilon: f64,
    regret_constant: f64,
    seed: u64,
) -> Result<ConvergenceReport, HarnessError> {
    if !(epsilon > 0.0) || !(regret_constant > 0.0) {
        return Err(HarnessError::BadConfig(format!(
            "epsilon = {epsilon} and C = {regret_constant} must be positive"
        )));
    }
    let k = game.n_tasks();
    let convexity_warning = !game.is_convex_on_box();

    let (schedule, rounds) = if k >= 2 {
        let s = theory_schedule(epsilon, k, game.cap, regret_constant)?;
        let t = s.t_min;
        (Some(s), t)
    } else {
        // Only the parameter player's regret matters: C / sqrt(T) <= eps/2.
        (None, (4.0 * (regret_constant / epsilon).powi(2)).ceil() as u64)
    };

    let mut rng = stream(seed, Purpose::GameInit, 0, 0);
    let mut theta: f64 = rng.gen_range(game.lower..=game.upper);
    let diameter = game.upper - game.lower;
    let lipschitz = game.lipschitz_constant().max(1e-12);

    let mut q: Option<TaskDistribution> = if k >= 2 {
        Some(TaskDistribution::uniform(k)?)
    } else {
        None
    };
    let p0 = if k >= 2 {
        Some(TaskDistribution::uniform(k)?)
    } else {
        None
    };

    let mut gap_sums = vec![0.0; k];
    let mut q_sums = vec![0.0; k];
    for t in 1..=rounds {
        let gaps = game.gaps(theta);
        for (acc, &g) in gap_sums.iter_mut().zip(&gaps) {
            *acc += g;
        }
        let weights: Vec<f64> = match &q {
            Some(dist) => dist.probs().to_vec(),
            None => vec![1.0],
        };
        for (acc, &w) in q_sums.iter_mut().zip(&weights) {
            *acc += w;
        }

        // Parameter player: projected OGD on <q_t, g(theta)>.
        let subs = game.subgradients(theta);
        let direction: f64 = weights.iter().zip(&subs).map(|(w, s)| w * s).sum();
        let step = diameter / (lipschitz * (t as f64).sqrt());
        theta = (theta - step * direction).clamp(game.lower, game.upper);

        // Sampling player: mirror ascent on the observed gaps.
        if let (Some(dist), Some(base)) = (&mut q, &p0) {
            let schedule = schedule.as_ref().expect("schedule exists for k >= 2");
            let gv = GapVector::new(gaps, game.cap)?;
            *dist = mirror_ascent_step(dist, &gv, schedule.eta, schedule.alpha, base)?;
        }
    }

    let averaged_worst_gap = gap_sums
        .iter()
        .map(|&s| s / rounds as f64)
        .fold(f64::NEG_INFINITY, f64::max);
    let min_max_value = grid_search_min_max(game, 1e-4);
    let final_q = match &q {
        Some(dist) => dist.probs().to_vec(),
        None => vec![1.0],
    };
    let mean_q = q_sums.iter().map(|&s| s / rounds as f64).collect();
    Ok(ConvergenceReport {
        schedule,
        rounds,
        averaged_worst_gap,
        min_max_value,
        epsilon,
        bound_holds: averaged_worst_gap <= min_max_value + epsilon,
        convexity_warning,
        final_q,
        mean_q,
    })
}

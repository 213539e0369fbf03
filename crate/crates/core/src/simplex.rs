//! Geometry of the k-task probability simplex.
//!
//! Everything the adaptive samplers need from the simplex lives here: the
//! softmax best response to a gap vector, the exponentiated-gradient (mirror
//! ascent) step, its weighted-geometric-mean form, KL divergence, and the KL
//! projection onto the simplex with a minimum-probability floor.
//!
//! All operations are pure functions computed in the log domain with
//! max-subtraction, so sharpness parameters up to `eta * gap ~ 700` stay far
//! from overflow. Every returned distribution is renormalized by its exact
//! sum to cancel float drift over long runs.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Absolute tolerance for the sum-to-one invariant.
pub const SIMPLEX_SUM_TOL: f64 = 1e-9;

/// Errors raised by simplex operations.
#[derive(Debug, Error, PartialEq)]
pub enum SimplexError {
    #[error("distribution needs at least 2 entries, got {0}")]
    TooFewTasks(usize),
    #[error("entry {index} is {value}, expected a finite non-negative value")]
    BadEntry { index: usize, value: f64 },
    #[error("entries sum to {0}, expected 1 within 1e-9")]
    NotNormalized(f64),
    #[error("gap entry {index} is {value}, expected finite")]
    NonFiniteGap { index: usize, value: f64 },
    #[error("eta must be positive, got {0}")]
    BadEta(f64),
    #[error("step size {alpha} must lie in (0, eta={eta}]")]
    BadStepSize { alpha: f64, eta: f64 },
    #[error("mix weight must lie in (0, 1], got {0}")]
    BadMix(f64),
    #[error("entry {0} is zero; log-domain update undefined")]
    ZeroEntry(usize),
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("floor {eps} infeasible for {k} tasks (need eps * k < 1)")]
    InfeasibleFloor { eps: f64, k: usize },
}

/// A point on the k-simplex used to sample tasks.
///
/// Invariants: every entry is finite and non-negative, the entries sum to 1
/// within [`SIMPLEX_SUM_TOL`], and `k >= 2`. A 1-task "distribution" is
/// rejected at construction since sampling is meaningless there.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskDistribution {
    probs: Vec<f64>,
}

impl TaskDistribution {
    /// Validates and wraps a probability vector.
    pub fn new(probs: Vec<f64>) -> Result<Self, SimplexError> {
        if probs.len() < 2 {
            return Err(SimplexError::TooFewTasks(probs.len()));
        }
        let mut sum = 0.0;
        for (i, &p) in probs.iter().enumerate() {
            if !p.is_finite() || p < 0.0 {
                return Err(SimplexError::BadEntry { index: i, value: p });
            }
            sum += p;
        }
        if (sum - 1.0).abs() > SIMPLEX_SUM_TOL {
            return Err(SimplexError::NotNormalized(sum));
        }
        Ok(Self { probs })
    }

    /// Normalizes an arbitrary non-negative vector onto the simplex.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self, SimplexError> {
        if weights.len() < 2 {
            return Err(SimplexError::TooFewTasks(weights.len()));
        }
        let mut sum = 0.0;
        for (i, &w) in weights.iter().enumerate() {
            if !w.is_finite() || w < 0.0 {
                return Err(SimplexError::BadEntry { index: i, value: w });
            }
            sum += w;
        }
        if sum <= 0.0 {
            return Err(SimplexError::NotNormalized(sum));
        }
        let probs = weights.into_iter().map(|w| w / sum).collect();
        Self::new(probs)
    }

    /// The uniform distribution over `k` tasks.
    pub fn uniform(k: usize) -> Result<Self, SimplexError> {
        if k < 2 {
            return Err(SimplexError::TooFewTasks(k));
        }
        Ok(Self {
            probs: vec![1.0 / k as f64; k],
        })
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn get(&self, i: usize) -> f64 {
        self.probs[i]
    }

    /// True when every entry is strictly positive.
    pub fn strictly_positive(&self) -> bool {
        self.probs.iter().all(|&p| p > 0.0)
    }
}

/// Per-task scores in `[0, M]` driving the adaptive samplers.
///
/// After normalization the bound is `M = 1`; the synthetic convergence
/// experiments use larger bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapVector {
    gaps: Vec<f64>,
    bound: f64,
}

impl GapVector {
    /// Wraps a gap vector, checking every entry lies in `[0, bound]`.
    pub fn new(gaps: Vec<f64>, bound: f64) -> Result<Self, SimplexError> {
        if !bound.is_finite() || bound < 0.0 {
            return Err(SimplexError::NonFiniteGap {
                index: 0,
                value: bound,
            });
        }
        for (i, &g) in gaps.iter().enumerate() {
            if !g.is_finite() {
                return Err(SimplexError::NonFiniteGap { index: i, value: g });
            }
            if g < 0.0 || g > bound {
                return Err(SimplexError::BadEntry { index: i, value: g });
            }
        }
        Ok(Self { gaps, bound })
    }

    /// Gap vector normalized into `[0, 1]`.
    pub fn normalized(gaps: Vec<f64>) -> Result<Self, SimplexError> {
        Self::new(gaps, 1.0)
    }

    pub fn len(&self) -> usize {
        self.gaps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gaps.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.gaps
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }
}

fn log_sum_exp(logs: &[f64]) -> f64 {
    let max = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    let sum: f64 = logs.iter().map(|&l| (l - max).exp()).sum();
    max + sum.ln()
}

/// Exponentiates log-weights with max-subtraction and renormalizes exactly.
fn distribution_from_logs(logs: &[f64]) -> Result<TaskDistribution, SimplexError> {
    let lse = log_sum_exp(logs);
    let mut probs: Vec<f64> = logs.iter().map(|&l| (l - lse).exp()).collect();
    let sum: f64 = probs.iter().sum();
    for p in &mut probs {
        *p /= sum;
    }
    TaskDistribution::new(probs)
}

/// Sharpest distribution within the KL-regularized inner maximization:
/// `q*_i ∝ exp(eta * gap_i)`.
///
/// As `eta -> 0` this approaches uniform; as `eta -> inf` it concentrates on
/// the largest gap. Shift-invariant in the gaps.
pub fn softmax_best_response(
    gaps: &GapVector,
    eta: f64,
) -> Result<TaskDistribution, SimplexError> {
    if !(eta > 0.0) || !eta.is_finite() {
        return Err(SimplexError::BadEta(eta));
    }
    if gaps.len() < 2 {
        return Err(SimplexError::TooFewTasks(gaps.len()));
    }
    let logs: Vec<f64> = gaps.values().iter().map(|&g| eta * g).collect();
    distribution_from_logs(&logs)
}

/// One exponentiated-gradient ascent step on the KL-regularized objective.
///
/// The ascent gradient at `q` is `h_i = gap_i - (log(q_i / p0_i) + 1) / eta`
/// and the update is `q'_i ∝ q_i * exp(alpha * h_i)`. With `alpha` in
/// `(0, eta]` and uniform `p0` this equals the weighted geometric mean
/// `q_i^(1 - alpha/eta) * (q*_i)^(alpha/eta)` up to normalization, which is
/// what [`geometric_mean_update`] computes as an independent route.
pub fn mirror_ascent_step(
    q: &TaskDistribution,
    gaps: &GapVector,
    eta: f64,
    alpha: f64,
    p0: &TaskDistribution,
) -> Result<TaskDistribution, SimplexError> {
    if !(eta > 0.0) || !eta.is_finite() {
        return Err(SimplexError::BadEta(eta));
    }
    if !(alpha > 0.0) || alpha > eta {
        return Err(SimplexError::BadStepSize { alpha, eta });
    }
    if q.len() != gaps.len() {
        return Err(SimplexError::LengthMismatch(q.len(), gaps.len()));
    }
    if q.len() != p0.len() {
        return Err(SimplexError::LengthMismatch(q.len(), p0.len()));
    }
    let mut logs = Vec::with_capacity(q.len());
    for i in 0..q.len() {
        let qi = q.get(i);
        if qi <= 0.0 {
            return Err(SimplexError::ZeroEntry(i));
        }
        let p0i = p0.get(i);
        if p0i <= 0.0 {
            return Err(SimplexError::ZeroEntry(i));
        }
        let h = gaps.values()[i] - ((qi / p0i).ln() + 1.0) / eta;
        logs.push(qi.ln() + alpha * h);
    }
    distribution_from_logs(&logs)
}

/// Weighted geometric mean of two distributions:
/// `q'_i ∝ q_i^(1 - mix) * (q_star_i)^mix`.
///
/// With `mix = alpha / eta` this is the closed form of
/// [`mirror_ascent_step`] and serves as its oracle.
pub fn geometric_mean_update(
    q: &TaskDistribution,
    q_star: &TaskDistribution,
    mix: f64,
) -> Result<TaskDistribution, SimplexError> {
    if !(mix > 0.0) || mix > 1.0 {
        return Err(SimplexError::BadMix(mix));
    }
    if q.len() != q_star.len() {
        return Err(SimplexError::LengthMismatch(q.len(), q_star.len()));
    }
    let mut logs = Vec::with_capacity(q.len());
    for i in 0..q.len() {
        let (qi, si) = (q.get(i), q_star.get(i));
        if qi <= 0.0 || si <= 0.0 {
            return Err(SimplexError::ZeroEntry(i));
        }
        logs.push((1.0 - mix) * qi.ln() + mix * si.ln());
    }
    distribution_from_logs(&logs)
}

/// KL projection onto `{q : q_i >= eps, sum q = 1}`:
/// `argmin KL(q || q_hat)` subject to the floor.
///
/// The KKT solution has the form `q_i = max(eps, c * q_hat_i)`, so the
/// projection reduces to clamp-and-rescale: repeatedly pin coordinates whose
/// rescaled value falls below the floor and spread the remaining mass over
/// the rest. Terminates in at most k passes. Entries of `q_hat` that are
/// zero are pinned to `eps` on the first pass.
pub fn kl_projection_min_prob(
    q_hat: &TaskDistribution,
    eps: f64,
) -> Result<TaskDistribution, SimplexError> {
    let k = q_hat.len();
    if !(eps > 0.0) || eps * k as f64 >= 1.0 {
        return Err(SimplexError::InfeasibleFloor { eps, k });
    }
    if q_hat.probs().iter().all(|&p| p >= eps) {
        return Ok(q_hat.clone());
    }
    let mut clamped = vec![false; k];
    let mut out = q_hat.probs().to_vec();
    for _pass in 0..k {
        let clamped_mass = eps * clamped.iter().filter(|&&c| c).count() as f64;
        let free_mass: f64 = out
            .iter()
            .zip(&clamped)
            .filter(|(_, &c)| !c)
            .map(|(&p, _)| p)
            .sum();
        let scale = (1.0 - clamped_mass) / free_mass;
        let mut newly_clamped = false;
        for i in 0..k {
            if clamped[i] {
                continue;
            }
            if out[i] * scale < eps {
                clamped[i] = true;
                newly_clamped = true;
            }
        }
        if !newly_clamped {
            let mut probs = vec![0.0; k];
            for i in 0..k {
                probs[i] = if clamped[i] { eps } else { out[i] * scale };
            }
            let sum: f64 = probs.iter().sum();
            for p in &mut probs {
                *p /= sum;
            }
            return TaskDistribution::new(probs);
        }
        out = q_hat.probs().to_vec();
    }
    // All coordinates clamped is impossible while eps * k < 1.
    unreachable!("clamp-and-rescale failed to terminate");
}

/// `KL(q || p) = sum q_i log(q_i / p_i)` with the `0 log 0 = 0` convention.
///
/// Returns `f64::INFINITY` when `q` puts mass where `p` has none.
pub fn kl_divergence(q: &TaskDistribution, p: &TaskDistribution) -> f64 {
    assert_eq!(q.len(), p.len(), "kl_divergence length mismatch");
    let mut total = 0.0;
    for i in 0..q.len() {
        let qi = q.get(i);
        if qi == 0.0 {
            continue;
        }
        let pi = p.get(i);
        if pi == 0.0 {
            return f64::INFINITY;
        }
        total += qi * (qi / pi).ln();
    }
    total.max(0.0)
}

//! The convergence theorem's parameter schedule.
//!
//! Given a target error `epsilon`, task count `k`, gap bound `M`, and the
//! policy player's regret constant `C`, the schedule fixes
//!
//! ```text
//! eta   = 2 log k / epsilon
//! G     = M + (1 + max(eta M, log k)) / eta
//! T_min = ceil( 4 (G sqrt(2 log k) + C)^2 / epsilon^2 )
//! alpha = sqrt(2 log k) / (G sqrt(T))        (evaluated at T = T_min)
//! ```
//!
//! Running the two-player loop for `T >= T_min` rounds with these values
//! guarantees the averaged worst-task gap lands within `epsilon` of the
//! minimax optimum.

use serde::{Deserialize, Serialize};

use super::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheorySchedule {
    pub epsilon: f64,
    pub k: usize,
    pub gap_bound: f64,
    pub regret_constant: f64,
    pub eta: f64,
    pub lipschitz_bound: f64,
    pub alpha: f64,
    pub t_min: u64,
}

/// Evaluates the schedule. Requires `k >= 2`; a single-task game has no
/// sampling player and needs only the policy player's regret bound.
pub fn theory_schedule(
    epsilon: f64,
    k: usize,
    gap_bound: f64,
    regret_constant: f64,
) -> Result<TheorySchedule, HarnessError> {
    if !(epsilon > 0.0) || !(gap_bound >= 0.0) || !(regret_constant > 0.0) {
        return Err(HarnessError::BadConfig(format!(
            "schedule inputs must be positive: epsilon={epsilon}, M={gap_bound}, C={regret_constant}"
        )));
    }
    if k < 2 {
        return Err(HarnessError::BadConfig(
            "schedule needs k >= 2 (log k must be positive)".into(),
        ));
    }
    let log_k = (k as f64).ln();
    let eta = 2.0 * log_k / epsilon;
    let lipschitz_bound = gap_bound + (1.0 + (eta * gap_bound).max(log_k)) / eta;
    let root = (2.0 * log_k).sqrt();
    let t_min = (4.0 * (lipschitz_bound * root + regret_constant).powi(2) / epsilon.powi(2)).ceil()
        as u64;
    let alpha = root / (lipschitz_bound * (t_min as f64).sqrt());
    Ok(TheorySchedule {
        epsilon,
        k,
        gap_bound,
        regret_constant,
        eta,
        lipschitz_bound,
        alpha,
        t_min,
    })
}

//! Reporting metrics: normalized returns and bootstrap confidence
//! intervals.

use rand::Rng;

use super::HarnessError;

/// Maps a return into `[0, 1]` relative to per-task min/max bounds.
pub fn normalized_return(j: f64, j_min: f64, j_max: f64) -> Result<f64, HarnessError> {
    if !(j_max > j_min) {
        return Err(HarnessError::BadConfig(format!(
            "normalized_return needs j_max > j_min, got [{j_min}, {j_max}]"
        )));
    }
    Ok(((j - j_min) / (j_max - j_min)).clamp(0.0, 1.0))
}

/// Percentile bootstrap confidence interval for the mean.
///
/// Deterministic given the stream; `level = 0.95` gives the usual 95%
/// interval, `level = 0` collapses both ends onto the bootstrap median.
pub fn bootstrap_ci<R: Rng>(
    samples: &[f64],
    level: f64,
    n_resamples: usize,
    rng: &mut R,
) -> Result<(f64, f64), HarnessError> {
    if samples.len() < 2 {
        return Err(HarnessError::BadConfig(format!(
            "bootstrap needs at least 2 samples, got {}",
            samples.len()
        )));
    }
    if !(0.0..1.0).contains(&level) {
        return Err(HarnessError::BadConfig(format!(
            "confidence level {level} must lie in [0, 1)"
        )));
    }
    if n_resamples == 0 {
        return Err(HarnessError::BadConfig("n_resamples must be positive".into()));
    }
    let n = samples.len();
    let mut means = Vec::with_capacity(n_resamples);
    for _ in 0..n_resamples {
        let mut total = 0.0;
        for _ in 0..n {
            total += samples[rng.gen_range(0..n)];
        }
        means.push(total / n as f64);
    }
    means.sort_by(f64::total_cmp);
    let lo = percentile(&means, (1.0 - level) / 2.0);
    let hi = percentile(&means, 1.0 - (1.0 - level) / 2.0);
    Ok((lo, hi))
}

/// Linear-interpolation percentile of a sorted slice.
fn percentile(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = p * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

//! Counter-based splittable random streams.
//!
//! Every consumer of randomness derives its own ChaCha stream from
//! `(seed, purpose, a, b)`, so the draw sequence for one episode can never
//! depend on scheduling, worker count, or how much randomness some other
//! component consumed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// What a stream is for. Each purpose gets a disjoint key space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Purpose {
    PolicyInit = 1,
    TaskDraw = 2,
    Rollout = 3,
    Bootstrap = 4,
    GameInit = 5,
    CosineRollout = 6,
    RandomReturns = 7,
}

/// A fresh stream for `(seed, purpose, a, b)`.
///
/// `a` and `b` are caller-chosen counters, typically iteration and
/// episode index.
pub fn stream(seed: u64, purpose: Purpose, a: u64, b: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[0..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&(purpose as u64).to_le_bytes());
    key[16..24].copy_from_slice(&a.to_le_bytes());
    key[24..32].copy_from_slice(&b.to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

/// Inverse-CDF draw from a categorical distribution.
///
/// `probs` must be non-negative and sum to ~1; the last positive entry
/// absorbs any residual rounding mass.
pub fn sample_categorical<R: Rng>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            last_positive = i;
        }
        acc += p;
        if u < acc {
            return i;
        }
    }
    last_positive
}

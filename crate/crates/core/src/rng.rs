//! Seeded random stream shared by every stochastic step of a run.
//!
//! A run consumes draws in a fixed order (teachers per school, then per
//! student age, wealth and growth rate, then per tick expenditure noise and
//! rank noise), so a whole simulation is a pure function of its parameters.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer.
#[inline]
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for one (run, repetition) pair of a sweep:
/// `splitmix64(base ^ run_id * 0x9E3779B97F4A7C15 ^ repetition * 0xBF58476D1CE4E5B9)`
/// with wrapping multiplication.
pub fn mix_seed(base: u64, run_id: u64, repetition: u64) -> u64 {
    splitmix64(
        base ^ run_id.wrapping_mul(0x9E37_79B9_7F4A_7C15)
            ^ repetition.wrapping_mul(0xBF58_476D_1CE4_E5B9),
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimRng {
    inner: ChaCha8Rng,
}

impl SimRng {
    pub fn new(seed: u64) -> Self {
        Self {
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.gen()
    }

    /// Uniform integer in the closed range `[lo, hi]`.
    pub fn uniform_int(&mut self, lo: i64, hi: i64) -> i64 {
        assert!(lo <= hi, "uniform_int: empty range [{lo}, {hi}]");
        self.inner.gen_range(lo..=hi)
    }

    /// Uniform real in `[lo, hi)`; returns `lo` when the range is degenerate.
    pub fn uniform_real(&mut self, lo: f64, hi: f64) -> f64 {
        if hi <= lo {
            return lo;
        }
        lo + self.inner.gen::<f64>() * (hi - lo)
    }
}

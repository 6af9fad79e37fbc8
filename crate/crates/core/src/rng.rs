//! The one random source used across the crate.
//!
//! Generator: xoshiro256++ seeded from a `u64` through SplitMix64 (the
//! reference seeding procedure). All derived draws are defined here in terms
//! of `next_u64` so that any implementation of xoshiro256++ reproduces them:
//!
//! * open unit float: `((x >> 11) + 0.5) * 2^-53`, always in `(0, 1)`
//! * index below `n`: Lemire's widening multiply with rejection
//! * standard normal: Box–Muller, `sqrt(-2 ln u1) * cos(2π u2)` with two open
//!   unit floats; the sine partner is discarded.

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

#[derive(Debug, Clone)]
pub struct Rng(Xoshiro256PlusPlus);

impl Rng {
    pub fn from_seed(seed: u64) -> Self {
        Self(Xoshiro256PlusPlus::seed_from_u64(seed))
    }

    /// Stream for ensemble member `index`: seed XOR index.
    pub fn for_stream(seed: u64, index: u64) -> Self {
        Self::from_seed(seed ^ index)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    pub fn open_unit(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `[0, n)`. Panics if `n == 0`.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "empty range");
        let threshold = n.wrapping_neg() % n;
        loop {
            let m = u128::from(self.next_u64()) * u128::from(n);
            if (m as u64) >= threshold {
                return (m >> 64) as u64;
            }
        }
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + self.open_unit() * (hi - lo)
    }

    pub fn standard_normal(&mut self) -> f64 {
        let u1 = self.open_unit();
        let u2 = self.open_unit();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    pub fn normal(&mut self, mean: f64, sd: f64) -> f64 {
        mean + sd * self.standard_normal()
    }
}

//! Seeded randomness with a fixed, documented derivation of every variate.
//!
//! The stream generator is ChaCha8 (`rand_chacha::ChaCha8Rng`), seeded through
//! `SeedableRng::seed_from_u64`. ChaCha output is specified by its algorithm,
//! not by the `rand` release, and the conversions below are implemented here
//! rather than borrowed from `rand`'s distribution code. Together this keeps
//! instance data and stochastic traces bit-identical across platforms and
//! dependency upgrades.
//!
//! * `uniform`: top 53 bits of one word scaled by 2^-53, in `[0, 1)`.
//! * `index(n)`: rejection sampling. Draw words `w`; reject while
//!   `w >= 2^64 - (2^64 mod n)`; return `w mod n`. Unbiased for every `n`.
//! * `normal`: Box–Muller on two uniforms, both outputs used in order.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::math;

#[derive(Debug, Clone)]
pub struct SeededRng {
    inner: ChaCha8Rng,
    spare_normal: Option<f64>,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        Self {
            inner: ChaCha8Rng::seed_from_u64(seed),
            spare_normal: None,
        }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `0..n`.
    pub fn index(&mut self, n: usize) -> usize {
        assert!(n > 0, "index range must be nonempty");
        let n = n as u64;
        // 2^64 mod n, computed without 128-bit arithmetic.
        let rem = (u64::MAX % n + 1) % n;
        let zone = u64::MAX - rem; // accept w <= zone
        loop {
            let w = self.next_u64();
            if w <= zone {
                return (w % n) as usize;
            }
        }
    }

    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        // u1 in (0, 1] so the log is finite.
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        let r = math::sqrt(-2.0 * math::ln(u1));
        let phi = 2.0 * core::f64::consts::PI * u2;
        self.spare_normal = Some(r * math::sin(phi));
        r * math::cos(phi)
    }
}

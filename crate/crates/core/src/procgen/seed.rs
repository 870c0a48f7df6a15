use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// SplitMix64 output finalizer. A bijection on `u64`.
pub fn splitmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedSpec {
    pub master_seed: u64,
    pub frame_index: u64,
}

/// Counter-based per-frame seed. Injective in `frame_index` for a fixed
/// master seed: a composition of bijections.
pub fn derive_frame_seed(s: SeedSpec) -> u64 {
    splitmix64(
        s.master_seed
            .wrapping_add(splitmix64(s.frame_index.wrapping_add(0x9e37_79b9_7f4a_7c15))),
    )
}

/// Single-consumer deterministic random stream.
#[derive(Debug, Clone)]
pub struct RngStream {
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        RngStream {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn for_frame(spec: SeedSpec) -> Self {
        RngStream::new(derive_frame_seed(spec))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform in [0, 1) with 53 bits of resolution.
    pub fn next_unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in the closed interval `[lo, hi]`.
    pub fn sample_uniform(&mut self, lo: f64, hi: f64) -> Result<f64> {
        if !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::Range { lo, hi });
        }
        let u = self.next_unit();
        Ok((lo + (hi - lo) * u).clamp(lo, hi))
    }

    /// Uniform index in `0..n`; `n` must be positive.
    pub fn index(&mut self, n: usize) -> usize {
        assert!(n > 0, "index() over an empty range");
        ((self.next_unit() * n as f64) as usize).min(n - 1)
    }

    pub fn coin(&mut self) -> bool {
        self.next_u64() >> 63 == 1
    }
}

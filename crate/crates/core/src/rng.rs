//! Seeded random streams.
//!
//! Every random decision in the crate draws from a [`Stream`]: ChaCha with
//! 8 rounds (the `rand_chacha` `ChaCha8Rng` block function, stream 0), keyed
//! by four consecutive SplitMix64 outputs of a 64-bit seed written
//! little-endian. Child seeds are derived with [`derive_seed`], so a study,
//! its simulations and every tree inside them get independent streams that
//! depend only on the master seed and their position.
//!
//! Integer and float draws are defined on raw `u64` words so other
//! implementations can reproduce them:
//!
//! - `next_f64`: `(u >> 11) * 2^-53`, uniform on `[0, 1)`.
//! - `below(n)`: rejection sampling, discard `u >= u64::MAX - (u64::MAX % n)`
//!   (wrapping to the full range when the remainder is `n - 1`), return `u % n`.
//! - `shuffle`: Fisher–Yates from the last index down, swapping `i` with `below(i + 1)`.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// One step of SplitMix64 applied to `state`.
pub fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of child `index` under `parent`.
pub fn derive_seed(parent: u64, index: u64) -> u64 {
    splitmix64(parent ^ splitmix64(index.wrapping_mul(GOLDEN_GAMMA) ^ 0x5851_F42D_4C95_7F2D))
}

/// Seed derived through a path of indices, e.g. `[simulation, purpose]`.
pub fn derive_path(seed: u64, path: &[u64]) -> u64 {
    path.iter().fold(seed, |s, &i| derive_seed(s, i))
}

#[derive(Debug, Clone)]
pub struct Stream {
    inner: ChaCha8Rng,
}

impl Stream {
    pub fn new(seed: u64) -> Self {
        let mut key = [0u8; 32];
        let mut state = seed;
        for chunk in key.chunks_exact_mut(8) {
            let word = splitmix64(state);
            state = state.wrapping_add(GOLDEN_GAMMA);
            chunk.copy_from_slice(&word.to_le_bytes());
        }
        Self {
            inner: ChaCha8Rng::from_seed(key),
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `0..n`. Panics if `n == 0`.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "below(0)");
        let rem = u64::MAX % n;
        if rem == n - 1 {
            return self.next_u64() % n;
        }
        let zone = u64::MAX - rem;
        loop {
            let u = self.next_u64();
            if u < zone {
                return u % n;
            }
        }
    }

    /// Uniform integer in the closed range `lo..=hi`.
    pub fn between(&mut self, lo: usize, hi: usize) -> usize {
        assert!(lo <= hi);
        lo + self.below((hi - lo) as u64 + 1) as usize
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i as u64 + 1) as usize;
            items.swap(i, j);
        }
    }
}

//! Counter-based random streams.
//!
//! Every random decision in the toolchain draws from a stream whose seed is a
//! pure hash of `(master_seed, purpose tag, indices...)`. Streams never share
//! state, so the values a worker sees do not depend on which worker runs a
//! task or in what order tasks complete.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Incremental builder for derived 64-bit seeds.
///
/// ```
/// use weldforge::rng::SeedKey;
/// let a = SeedKey::new(7).tag("shot").u64(3).finish();
/// let b = SeedKey::new(7).tag("shot").u64(3).finish();
/// assert_eq!(a, b);
/// ```
#[derive(Debug, Clone, Copy)]
pub struct SeedKey {
    state: u64,
}

impl SeedKey {
    pub fn new(master_seed: u64) -> Self {
        SeedKey {
            state: mix64(master_seed ^ GOLDEN),
        }
    }

    #[inline]
    fn absorb(mut self, word: u64) -> Self {
        self.state = mix64(self.state.wrapping_add(GOLDEN) ^ word);
        self
    }

    /// Absorbs a purpose tag or any other string component.
    pub fn tag(self, s: &str) -> Self {
        let mut key = self.absorb(s.len() as u64);
        for chunk in s.as_bytes().chunks(8) {
            let mut buf = [0u8; 8];
            buf[..chunk.len()].copy_from_slice(chunk);
            key = key.absorb(u64::from_le_bytes(buf));
        }
        key
    }

    pub fn u64(self, v: u64) -> Self {
        self.absorb(v)
    }

    pub fn finish(self) -> u64 {
        mix64(self.state)
    }

    /// Opens a random stream seeded from the key.
    pub fn stream(self) -> Stream {
        Stream::from_seed(self.finish())
    }
}

/// Shorthand for `SeedKey::new(master).tag(tag)` followed by the indices.
pub fn derive_seed(master_seed: u64, tag: &str, indices: &[u64]) -> u64 {
    indices
        .iter()
        .fold(SeedKey::new(master_seed).tag(tag), |k, &i| k.u64(i))
        .finish()
}

/// A seeded ChaCha8 stream with the handful of draws the toolchain needs.
#[derive(Debug, Clone)]
pub struct Stream {
    rng: ChaCha8Rng,
}

impl Stream {
    pub fn from_seed(seed: u64) -> Self {
        Stream {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Uniform in `[0, 1)`.
    pub fn unit(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    /// Uniform in `[lo, hi)`; returns `lo` exactly when the range is empty.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        let u = self.unit();
        if hi > lo {
            lo + (hi - lo) * u
        } else {
            lo
        }
    }

    /// Uniform integer in the inclusive range `[lo, hi]`.
    pub fn int_inclusive(&mut self, lo: u64, hi: u64) -> u64 {
        self.rng.random_range(lo..=hi)
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        p > 0.0 && self.unit() < p
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.random::<u64>()
    }

    /// Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.rng.random_range(0..=i);
            items.swap(i, j);
        }
    }
}

/// Stateless lattice hash in `[0, 1)`, used by value noise.
#[inline]
pub fn lattice_unit(seed: u64, ix: i64, iy: i64) -> f64 {
    let h = mix64(seed ^ mix64((ix as u64).wrapping_mul(GOLDEN) ^ (iy as u64).rotate_left(32)));
    (h >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

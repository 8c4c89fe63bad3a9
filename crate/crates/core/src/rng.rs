//! Seed handling and the deterministic generator shared by every stage.
//!
//! A run seed is a free-form string (the default is `"1.3035772690"`). It is
//! turned into 64 bits by hashing its UTF-8 bytes with FNV-1a 64
//! (offset basis `0xcbf29ce484222325`, prime `0x100000001b3`); that value
//! seeds a SplitMix64 generator:
//!
//! ```text
//! state += 0x9e3779b97f4a7c15
//! z = state
//! z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9
//! z = (z ^ (z >> 27)) * 0x94d049bb133111eb
//! return z ^ (z >> 31)
//! ```
//!
//! All arithmetic wraps modulo 2^64. Bounded integers use rejection sampling
//! over `next_u64`, and shuffles are the descending Fisher-Yates variant, so
//! any language can reproduce a selection bit for bit.

use std::fmt;

pub const DEFAULT_SEED: &str = "1.3035772690";

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// FNV-1a 64-bit hash of a byte string.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    bytes.iter().fold(FNV_OFFSET, |hash, &b| {
        (hash ^ u64::from(b)).wrapping_mul(FNV_PRIME)
    })
}

/// A run seed as supplied by the user.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Seed(String);

impl Seed {
    pub fn new(seed: impl Into<String>) -> Option<Self> {
        let seed = seed.into();
        if seed.is_empty() || seed.contains(['\t', '\n', '\r', ' ']) {
            None
        } else {
            Some(Seed(seed))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// The 64-bit value derived from the seed string.
    pub fn value(&self) -> u64 {
        fnv1a64(self.0.as_bytes())
    }

    /// Generator seeded directly from the seed value.
    pub fn rng(&self) -> SplitMix64 {
        SplitMix64::new(self.value())
    }

    /// Generator seeded from `seed value + offset` (used for per-epoch streams).
    pub fn rng_offset(&self, offset: u64) -> SplitMix64 {
        SplitMix64::new(self.value().wrapping_add(offset))
    }

    /// Independent stream for a named purpose: FNV-1a over `seed ":" tag`.
    pub fn derive(&self, tag: &str) -> SplitMix64 {
        let mut bytes = Vec::with_capacity(self.0.len() + 1 + tag.len());
        bytes.extend_from_slice(self.0.as_bytes());
        bytes.push(b':');
        bytes.extend_from_slice(tag.as_bytes());
        SplitMix64::new(fnv1a64(&bytes))
    }
}

impl Default for Seed {
    fn default() -> Self {
        Seed(DEFAULT_SEED.to_string())
    }
}

impl fmt::Display for Seed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::str::FromStr for Seed {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Seed::new(s).ok_or_else(|| format!("invalid seed {s:?}: must be nonempty without whitespace"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(state: u64) -> Self {
        SplitMix64 { state }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    /// Uniform in `[0, 1)` with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `[0, bound)`; rejects the biased tail of the u64 range.
    pub fn below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0, "bound must be positive");
        let zone = u64::MAX - (u64::MAX % bound) - 1;
        loop {
            let x = self.next_u64();
            if x <= zone {
                return x % bound;
            }
        }
    }

    /// Standard normal deviate (Box-Muller, one value per two uniforms).
    pub fn normal(&mut self) -> f64 {
        let u1 = 1.0 - self.next_f64();
        let u2 = self.next_f64();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }

    /// In-place Fisher-Yates shuffle: for i from len-1 down to 1, swap i with below(i+1).
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i as u64 + 1) as usize;
            items.swap(i, j);
        }
    }

    pub fn fill_bytes(&mut self, out: &mut [u8]) {
        for chunk in out.chunks_mut(8) {
            let word = self.next_u64().to_le_bytes();
            chunk.copy_from_slice(&word[..chunk.len()]);
        }
    }
}

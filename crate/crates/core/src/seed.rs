//! Deterministic randomness.
//!
//! Every random decision in the pipeline draws from [`SplitMix64`], a 64-bit
//! generator with a fixed, published output function, so artifacts are
//! reproducible across platforms and across independent implementations.
//!
//! Seeds for individual stages, queries and (query, positive) pairs are
//! derived from one master seed with [`derive_seed`]:
//!
//! ```text
//! h = mix64(master ^ fnv1a64(tag))
//! for part in parts: h = mix64(h ^ fnv1a64(part))
//! ```
//!
//! where `mix64` is the SplitMix64 finalizer. Derivation depends only on
//! the identifiers, never on processing order, so work can run in parallel.
//!
//! Uniform integers below `n` use rejection: draw `x`, reject while
//! `x >= floor(2^64 / n) * n`, return `x % n`. Sampling `k` of `n` items
//! without replacement is a partial Fisher-Yates shuffle: for `i` in
//! `0..k`, swap position `i` with `i + below(n - i)`; the sample is the
//! first `k` positions, in draw order.

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer (Stafford variant 13).
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// 64-bit FNV-1a over the UTF-8 bytes of `s`.
pub fn fnv1a64(s: &str) -> u64 {
    let mut h: u64 = 0xCBF2_9CE4_8422_2325;
    for b in s.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}

/// Derive a child seed from a master seed, a stage tag and identifier parts.
pub fn derive_seed(master: u64, tag: &str, parts: &[&str]) -> u64 {
    let mut h = mix64(master ^ fnv1a64(tag));
    for p in parts {
        h = mix64(h ^ fnv1a64(p));
    }
    h
}

/// The SplitMix64 generator.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn derived(master: u64, tag: &str, parts: &[&str]) -> Self {
        Self::new(derive_seed(master, tag, parts))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        mix64(self.state)
    }

    /// Uniform in `[0, 1)` with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `[0, n)`. `n` must be positive.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "below(0)");
        let zone = (u64::MAX / n) * n;
        loop {
            let x = self.next_u64();
            if x < zone {
                return x % n;
            }
        }
    }

    /// Index into a slice of length `n`.
    pub fn index(&mut self, n: usize) -> usize {
        self.below(n as u64) as usize
    }

    /// In-place Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        let n = items.len();
        for i in 0..n.saturating_sub(1) {
            let j = i + self.index(n - i);
            items.swap(i, j);
        }
    }

    /// Uniform sample of `min(k, items.len())` elements without replacement.
    pub fn sample<T: Clone>(&mut self, items: &[T], k: usize) -> Vec<T> {
        let mut draw = Draw::new(items.to_vec());
        draw.take(k, self)
    }

    /// Pick one element.
    pub fn choose<'a, T>(&mut self, items: &'a [T]) -> Option<&'a T> {
        if items.is_empty() {
            None
        } else {
            Some(&items[self.index(items.len())])
        }
    }
}

/// Incremental sampling without replacement: successive `take` calls
/// continue the same partial Fisher-Yates shuffle.
#[derive(Debug, Clone)]
pub struct Draw<T> {
    items: Vec<T>,
    taken: usize,
}

impl<T: Clone> Draw<T> {
    pub fn new(items: Vec<T>) -> Self {
        Self { items, taken: 0 }
    }

    pub fn remaining(&self) -> usize {
        self.items.len() - self.taken
    }

    pub fn take(&mut self, k: usize, rng: &mut SplitMix64) -> Vec<T> {
        let k = k.min(self.remaining());
        let n = self.items.len();
        let start = self.taken;
        for i in start..start + k {
            let j = i + rng.index(n - i);
            self.items.swap(i, j);
        }
        self.taken += k;
        self.items[start..start + k].to_vec()
    }
}

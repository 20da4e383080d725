//! Deterministic pseudo-randomness for splits, shuffles, and sampling.
//!
//! Every seeded draw in this crate goes through [`SplitMix64`]: one
//! published algorithm with fixed constants, so a seed reproduces the same
//! splits and samples on any platform. Per-item draws come from
//! [`stream_for`], which gives each item its own generator so that
//! processing order and resume points never shift another item's stream.

const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// SplitMix64: a 64-bit counter advanced by a fixed odd constant, pushed
/// through a bit-mixing finalizer (Steele, Lea, and Vigna's constants).
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GAMMA);
        mix(self.state)
    }

    /// Uniform in [0, 1), from the top 53 bits of the next output.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform index in 0..n via modular reduction. The bias is below
    /// n / 2^64, far under anything observable here, and the reduction is
    /// identical on every platform, which is what seed portability needs.
    pub fn next_below(&mut self, n: usize) -> usize {
        assert!(n > 0, "next_below requires n > 0");
        (self.next_u64() % n as u64) as usize
    }

    /// Fisher-Yates shuffle, swapping from the back of the slice.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.next_below(i + 1);
            items.swap(i, j);
        }
    }
}

/// Generator for item `index`'s substream under `seed`.
///
/// The substream is seeded with `mix(first(seed) ^ index)`, where
/// `first(x)` is the first output of a generator seeded with `x`.
/// Neighbouring indices therefore start from unrelated states.
pub fn stream_for(seed: u64, index: u64) -> SplitMix64 {
    let a = SplitMix64::new(seed).next_u64();
    SplitMix64::new(mix(a ^ index))
}

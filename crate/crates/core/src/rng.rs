//! Deterministic pseudorandom numbers for target subsampling.
//!
//! Experiments pick a reproducible subset of candidate targets. The
//! generator is splitmix64, which doubles as a stateless counter-based
//! hash: drawing at a fixed (seed, index) pair gives the same value no
//! matter in which order the candidates are visited.

const GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

fn finalize(state: u64) -> u64 {
    let mut z = state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn to_unit(bits: u64) -> f64 {
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Sequential splitmix64 generator.
#[derive(Clone, Debug)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GAMMA);
        finalize(self.state)
    }

    /// Uniform draw in [0, 1).
    pub fn next_f64(&mut self) -> f64 {
        to_unit(self.next_u64())
    }
}

/// Uniform draw in [0, 1) at position `index` of the stream seeded by
/// `seed`. Equals the `index`-th value of `SplitMix64::new(seed)`,
/// counting from one.
pub fn uniform_at(seed: u64, index: u64) -> f64 {
    to_unit(finalize(seed.wrapping_add(index.wrapping_mul(GAMMA))))
}

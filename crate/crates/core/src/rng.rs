//! Seeded random streams.
//!
//! Every parallel task owns a [`Stream`] derived from a master seed and a
//! stream index. ChaCha supports 2^64 independent streams per seed, so the
//! split is counter-based: no state is shared between tasks and results do
//! not depend on how tasks are scheduled onto workers.
//!
//! The polymer simulator additionally addresses disorder entries directly by
//! `(seed, replicate, layer, site)` through [`counter_hash`], which lets it
//! draw only the entries inside the light cone of the test functions.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A deterministic random stream identified by `(seed, stream)`.
#[derive(Clone, Debug)]
pub struct Stream {
    rng: ChaCha8Rng,
    seed: u64,
    stream: u64,
}

impl Stream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { rng, seed, stream }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream
    }

    /// Number of 32-bit words consumed so far.
    pub fn draw_counter(&self) -> u128 {
        self.rng.get_word_pos()
    }

    /// Uniform draw in `[0, 1)` with 53 random bits.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

impl RngCore for Stream {
    #[inline]
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    #[inline]
    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Stateless 64-bit hash of a four-word key (chained SplitMix64 finalizers).
#[inline]
pub fn counter_hash(seed: u64, a: u64, b: u64, c: u64) -> u64 {
    const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;
    let mut h = mix64(seed.wrapping_add(GOLDEN));
    h = mix64(h ^ a.wrapping_mul(GOLDEN).wrapping_add(0x632b_e59b_d9b4_e019));
    h = mix64(h ^ b.wrapping_mul(0xd6e8_feb8_6659_fd93).wrapping_add(GOLDEN));
    mix64(h ^ c.wrapping_mul(0xa076_1d64_78bd_642f).wrapping_add(0xe703_7ed1_a0b4_28db))
}

/// The `k`-th wyrand output of the sequence started at `key`: one 128-bit
/// multiply per draw, used for bulk per-site disorder.
#[inline]
pub fn wyrand_at(key: u64, k: u64) -> u64 {
    let s = key.wrapping_add(k.wrapping_add(1).wrapping_mul(0xa076_1d64_78bd_642f));
    let r = (s as u128) * ((s ^ 0xe703_7ed1_a0b4_28db) as u128);
    (r as u64) ^ ((r >> 64) as u64)
}

/// Maps the top 53 bits of a hash to `[0, 1)`.
#[inline]
pub fn unit_from_bits(bits: u64) -> f64 {
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

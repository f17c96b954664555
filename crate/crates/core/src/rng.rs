//! Deterministic randomness.
//!
//! Every seeded operation in this crate draws from one portable generator
//! (ChaCha8) so that identical seeds give bit-identical results across runs
//! and platforms. Independent streams are derived from a master seed with a
//! SplitMix64 mix, never by reusing the master directly.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The crate-wide seeded generator.
pub type SeededRng = ChaCha8Rng;

/// Builds the canonical generator for a 64-bit seed.
pub fn rng_from_seed(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derives an independent stream seed from a master seed.
///
/// SplitMix64 finalizer over `master + (stream+1)·golden`; the offset keeps
/// stream 0 distinct from the master seed itself.
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    let mut z = master.wrapping_add(stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// One draw from N(0, sd) via Box-Muller. Always consumes two uniforms so
/// the stream layout does not depend on sd.
pub fn normal(rng: &mut SeededRng, sd: f64) -> f64 {
    use rand::Rng;
    let u1: f64 = 1.0 - rng.gen::<f64>(); // (0, 1], keeps ln finite
    let u2: f64 = rng.gen();
    sd * (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Samples `k` distinct values from `0..n` by partial Fisher-Yates.
/// Returns all of `0..n` (shuffled) when `k >= n`.
pub fn sample_distinct(rng: &mut SeededRng, n: usize, k: usize) -> Vec<usize> {
    use rand::Rng;
    let mut pool: Vec<usize> = (0..n).collect();
    let take = k.min(n);
    for slot in 0..take {
        let pick = rng.gen_range(slot..n);
        pool.swap(slot, pick);
    }
    pool.truncate(take);
    pool
}

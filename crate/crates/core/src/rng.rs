//! Keyed random streams.
//!
//! Every stochastic quantity in the crate is drawn from a ChaCha stream
//! selected by a master seed plus a tuple of integer keys (draw index,
//! intersection, hour, ...). Streams for distinct keys are independent, so
//! draws can be generated in any order or in parallel and still reproduce.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer.
#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Folds a key tuple into a single 64-bit stream identifier.
pub fn hash_keys(keys: &[u64]) -> u64 {
    keys.iter().fold(0x9e37_79b9_7f4a_7c15, |acc, &k| {
        mix64(acc ^ mix64(k.wrapping_add(0x9e37_79b9_7f4a_7c15)))
    })
}

/// Derives a child seed from a parent seed and a key tuple.
pub fn derive_seed(seed: u64, keys: &[u64]) -> u64 {
    mix64(seed ^ hash_keys(keys))
}

/// Returns the ChaCha stream addressed by `(seed, keys)`.
pub fn keyed_rng(seed: u64, keys: &[u64]) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(hash_keys(keys));
    rng
}

/// Sequential generator for search loops.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

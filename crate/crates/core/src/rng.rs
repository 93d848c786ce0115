//! Deterministic random sub-streams.
//!
//! Every consumer of randomness (a tree, a fold assignment, a generator
//! stage) gets its own ChaCha8 stream addressed by a seed and a stream id, so
//! results never depend on evaluation order or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finaliser, used to fold several identifiers into one seed.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Combine a seed with a path of identifiers, e.g. `(seed, repeat, fold)`.
pub fn derive_seed(seed: u64, path: &[u64]) -> u64 {
    path.iter().fold(mix(seed), |acc, &id| mix(acc ^ mix(id)))
}

/// Independent stream `stream` of the generator seeded by `seed`.
pub fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

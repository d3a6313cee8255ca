//! Deterministic RNG substreams.
//!
//! Every randomized stage derives its own ChaCha stream from a master seed
//! and a list of integer tags, so results are independent of evaluation
//! order and reproducible across runs.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// splitmix64 finalizer; good avalanche for seed derivation.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Folds `tags` into `seed` to produce an independent substream seed.
pub fn substream_seed(seed: u64, tags: &[u64]) -> u64 {
    let mut acc = mix(seed);
    for &t in tags {
        acc = mix(acc ^ t);
    }
    acc
}

pub fn substream(seed: u64, tags: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(substream_seed(seed, tags))
}

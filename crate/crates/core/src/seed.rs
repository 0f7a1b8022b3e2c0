//! Seed derivation for every random stream in the crate.
//!
//! All randomness flows from a single 64-bit base seed. Sub-streams are keyed
//! by a path of integers (realization index, diagonal offset, partition code,
//! ...) folded through the SplitMix64 finalizer. The derived value seeds a
//! `ChaCha8Rng`; chunked Monte Carlo work additionally selects the ChaCha
//! stream by chunk index, so the sample-index to point mapping does not depend
//! on how chunks are scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 output function.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a sub-seed from `base` and a key path.
pub fn derive_seed(base: u64, path: &[u64]) -> u64 {
    path.iter().fold(mix64(base), |acc, &key| {
        mix64(
            acc.wrapping_add(GOLDEN_GAMMA)
                .wrapping_add(mix64(key ^ GOLDEN_GAMMA)),
        )
    })
}

/// Generator for the sub-stream at `path`.
pub fn stream_rng(base: u64, path: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(base, path))
}

/// Generator for chunk `chunk` of the sub-stream at `path`.
pub fn chunk_rng(base: u64, path: &[u64], chunk: u64) -> ChaCha8Rng {
    let mut rng = stream_rng(base, path);
    rng.set_stream(chunk);
    rng
}

/// Stable 64-bit hash of a string, used to key streams by partition encoding.
pub fn hash_str(s: &str) -> u64 {
    s.bytes().fold(0xCBF2_9CE4_8422_2325_u64, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0100_0000_01B3)
    })
}

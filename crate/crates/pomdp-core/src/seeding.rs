//! Deterministic RNG stream derivation.
//!
//! Every random draw in the workspace flows from a master seed through a
//! derivation path such as `[run, episode]` or `[INIT_STREAM, group]`. Each
//! path yields an independent ChaCha12 stream, so parallel runs share nothing
//! and any single episode can be replayed in isolation.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// SplitMix64 finalizer; the standard avalanche constants.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Hashes `(master, path)` into a 256-bit ChaCha seed.
///
/// The path elements are absorbed in order, each through its own SplitMix64
/// round, so `[1, 2]` and `[2, 1]` land on unrelated streams; the final state
/// is then expanded into four words.
pub fn derive_seed(master: u64, path: &[u64]) -> [u8; 32] {
    let mut x = splitmix64(master ^ 0x6A09_E667_F3BC_C908);
    for &elem in path {
        x = splitmix64(x ^ splitmix64(elem));
    }
    let mut seed = [0u8; 32];
    for word in 0..4 {
        x = splitmix64(x);
        seed[word * 8..word * 8 + 8].copy_from_slice(&x.to_le_bytes());
    }
    seed
}

/// An independent RNG stream for `(master, path)`.
pub fn derive_rng(master: u64, path: &[u64]) -> ChaCha12Rng {
    ChaCha12Rng::from_seed(derive_seed(master, path))
}

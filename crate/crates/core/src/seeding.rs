//! Order-independent seed derivation.
//!
//! Every random stream is keyed by a tuple of integers (master seed, trial,
//! slot, purpose, ...) and expanded through SplitMix64 into a ChaCha seed, so
//! a stream never depends on which thread runs it or in what order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds a key path into one 64-bit seed.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(master), |acc, &k| splitmix64(acc ^ splitmix64(k.wrapping_add(GOLDEN))))
}

pub fn stream_rng(master: u64, path: &[u64]) -> ChaCha8Rng {
    let s = derive_seed(master, path);
    let mut seed = [0u8; 32];
    let mut x = s;
    for chunk in seed.chunks_mut(8) {
        x = splitmix64(x);
        chunk.copy_from_slice(&x.to_le_bytes());
    }
    ChaCha8Rng::from_seed(seed)
}

/// Stream purposes, kept distinct so two uses of the same key never share draws.
pub mod purpose {
    pub const DEPLOYMENT: u64 = 1;
    pub const SLOT: u64 = 2;
    pub const PMF: u64 = 3;
}

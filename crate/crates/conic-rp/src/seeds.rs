//! Deterministic seed derivation.
//!
//! All randomness in the crate flows from a single master seed through
//! [`derive`], a SplitMix64 mix of the master seed and a stream tag. The
//! resulting 64-bit seeds key [`rand_chacha::ChaCha8Rng`], which produces an
//! identical stream on every platform, so batch runs are reproducible
//! bit-for-bit regardless of thread scheduling: each unit of work derives
//! its own seed from (master, index) instead of sharing a generator.

use rand_chacha::ChaCha8Rng;
use rand_chacha::rand_core::SeedableRng;

/// SplitMix64 finalizer.
fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives an independent sub-seed for a named stream of work.
///
/// `stream` values only need to be distinct per use site (instance index,
/// trial index, a role constant, …); the mix decorrelates adjacent values.
pub fn derive(master: u64, stream: u64) -> u64 {
    splitmix(master ^ splitmix(stream))
}

/// Convenience: a ChaCha8 generator seeded from `(master, stream)`.
pub fn rng(master: u64, stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(master, stream))
}

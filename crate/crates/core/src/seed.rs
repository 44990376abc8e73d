//! Deterministic seed derivation.
//!
//! Every randomized step draws from its own ChaCha8 stream whose seed is a
//! 64-bit FNV-1a hash of (master seed, tag, index). The scheme is stable and
//! documented so that any independent implementation can reproduce the exact
//! stream assignment:
//!
//! ```text
//! h = 0xcbf29ce484222325
//! for byte in le_bytes(master) ++ utf8(tag) ++ le_bytes(index):
//!     h = (h XOR byte) * 0x100000001b3   (mod 2^64)
//! ```

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// Derive the child seed for stream `(tag, index)` under `master`.
pub fn child_seed(master: u64, tag: &str, index: u64) -> u64 {
    let mut h = FNV_OFFSET;
    let mut eat = |bytes: &[u8]| {
        for &b in bytes {
            h = (h ^ u64::from(b)).wrapping_mul(FNV_PRIME);
        }
    };
    eat(&master.to_le_bytes());
    eat(tag.as_bytes());
    eat(&index.to_le_bytes());
    h
}

/// A reproducible generator for a derived seed.
pub fn rng_from(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

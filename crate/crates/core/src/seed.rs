//! Seed derivation and content hashing.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Per-run seed from a master seed and a run id.
///
/// Pure function of its inputs, so runs can execute in any order or in
/// parallel without sharing a generator. Two rounds of the splitmix64
/// finalizer.
pub fn derive_seed(master: u64, run_id: u64) -> u64 {
    splitmix64(splitmix64(master) ^ run_id.wrapping_mul(0xD1B5_4A32_D192_ED03))
}

/// Independent sub-stream seed for a named purpose within one run.
pub fn substream(seed: u64, purpose: u64) -> u64 {
    splitmix64(seed ^ splitmix64(purpose.wrapping_add(0x632B_E59B_D9B4_E019)))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// 64-bit FNV-1a.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325_u64;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

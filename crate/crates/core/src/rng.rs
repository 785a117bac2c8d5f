//! Seeded random streams.
//!
//! Every random draw descends from one top-level seed. A named substream
//! hashes the name into the seed; per-chain or per-run streams then select a
//! ChaCha stream number, so chains never share state and can run in any order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Name of the generator, recorded in run metadata.
pub const RNG_ALGORITHM: &str = "ChaCha8 (rand_chacha 0.9), substreams = splitmix64(seed ^ fnv1a64(name)), per-index ChaCha stream";

pub type Rng = ChaCha8Rng;

fn fnv1a64(name: &str) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for byte in name.bytes() {
        hash ^= u64::from(byte);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of the substream `name` below `seed`.
pub fn derive_seed(seed: u64, name: &str) -> u64 {
    splitmix64(seed ^ fnv1a64(name))
}

/// Generator for the named substream.
pub fn substream(seed: u64, name: &str) -> Rng {
    Rng::seed_from_u64(derive_seed(seed, name))
}

/// Generator for element `index` (a chain, a shot batch, a run) of the named substream.
pub fn indexed_stream(seed: u64, name: &str, index: u64) -> Rng {
    let mut rng = substream(seed, name);
    rng.set_stream(index);
    rng
}

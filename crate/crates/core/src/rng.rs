//! Seed derivation for reproducible parallel streams.
//!
//! Every random quantity is drawn from a ChaCha8 generator whose key comes
//! from `(seed, domain, index)` and whose stream id is the unit index
//! (individual, draw, replication). Results are therefore independent of
//! scheduling and worker count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Domain tags separating the uses of a single user seed.
pub mod domain {
    pub const SIMULATE: u64 = 0x5349_4d55;
    pub const REPLICATION: u64 = 0x5245_504c;
    pub const BOOTSTRAP: u64 = 0x424f_4f54;
    pub const SEARCH: u64 = 0x5345_4152;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes a seed with a domain tag and an index into a new 64-bit seed.
pub fn derive_seed(seed: u64, domain: u64, index: u64) -> u64 {
    splitmix64(splitmix64(seed ^ splitmix64(domain)) ^ index)
}

/// Generator for unit `index` within `domain`.
pub fn stream(seed: u64, domain: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, domain, 0));
    rng.set_stream(index);
    rng
}

/// Uniform draw on the open interval (0, 1).
pub fn open_unit(rng: &mut impl rand::RngCore) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

//! Counter-based derivation of independent random streams.
//!
//! Every random object (a site's cure train, a chunk of an edge's arrow
//! train, a Monte Carlo replica) draws from its own stream, keyed by the
//! master seed and a path of integers that names the object. Streams do not
//! depend on generation order, so results are identical whatever the number
//! of worker threads.

use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;

/// Generator used for every stream.
pub type StreamRng = Xoshiro256PlusPlus;

/// Object kinds mixed into stream keys.
pub mod tag {
    pub const CURE: u64 = 0x6375_7265;
    pub const TAU: u64 = 0x7461_75;
    pub const ARROW: u64 = 0x6172_726f_77;
    pub const THIN: u64 = 0x7468_696e;
    pub const REPLICA: u64 = 0x7265_706c;
    pub const FIELD: u64 = 0x6669_656c_64;
}

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Folds a key path into one 64-bit seed.
#[inline]
pub fn derive(seed: u64, path: &[u64]) -> u64 {
    let mut h = mix64(seed.wrapping_add(GOLDEN));
    for &p in path {
        h = mix64(h ^ mix64(p.wrapping_add(GOLDEN)));
    }
    h
}

#[inline]
pub fn stream(seed: u64, path: &[u64]) -> StreamRng {
    StreamRng::seed_from_u64(derive(seed, path))
}

/// A uniform in `[0, 1)` that is a pure function of the key path.
#[inline]
pub fn hashed_uniform(seed: u64, path: &[u64]) -> f64 {
    (derive(seed, path) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Encodes a signed lattice coordinate as a key component.
#[inline]
pub fn site_key(site: i64) -> u64 {
    site as u64
}

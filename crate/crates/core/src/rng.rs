//! Counter-seeded random streams.
//!
//! Every simulation derives its generators from a `(seed, stream)` pair so
//! results do not depend on how work is scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// SplitMix64 finaliser, used to decorrelate user-facing seeds and labels.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Hash a short label (experiment or curve name) into a stream key.
pub fn label_key(label: &str) -> u64 {
    // FNV-1a, then mixed; stable across platforms and compiler versions.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    mix64(h)
}

/// Independent generator for task `stream` of the experiment seeded by `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(mix64(seed));
    rng.set_stream(stream);
    rng
}

/// Derive a child seed, e.g. one per curve or per grid point.
pub fn child_seed(seed: u64, key: u64) -> u64 {
    mix64(seed ^ mix64(key))
}

//! Seeded, stream-addressable random number generation.
//!
//! Every random quantity in the crate is drawn from a ChaCha8 stream addressed
//! by `(seed, stream)`, so results never depend on thread scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Stream domains, kept apart so different consumers of one seed never overlap.
pub mod domain {
    pub const INSTANCE_ROW: u64 = 0;
    pub const RDE: u64 = 1 << 56;
    pub const PWIT: u64 = 2 << 56;
    pub const ESTIMATE: u64 = 3 << 56;
    pub const TRIAL: u64 = 4 << 56;
}

/// A generator positioned at the start of stream `stream` for `seed`.
pub fn stream(seed: u64, stream: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Derive a child seed from a parent seed and an index (SplitMix64 finaliser).
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Uniform on the open interval (0, 1), built from one 64-bit word.
#[inline]
pub fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let bits = rng.next_u64() >> 11;
    (bits as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// Exponential with the given rate by inversion; consumes exactly one word.
#[inline]
pub fn exponential<R: Rng + ?Sized>(rng: &mut R, rate: f64) -> f64 {
    -open_unit(rng).ln() / rate
}

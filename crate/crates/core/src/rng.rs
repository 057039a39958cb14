//! Deterministic stream derivation.
//!
//! Every random draw in this crate comes from a ChaCha12 stream keyed by a
//! 64-bit value derived from a user seed plus context words (speed-band
//! bounds, replicate indices). Mixing uses the splitmix64 finalizer so that
//! nearby seeds yield unrelated streams.

use rand_chacha::ChaCha12Rng;
use rand_chacha::rand_core::SeedableRng;

/// splitmix64 finalizer step.
#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Mix a context word into a key.
#[inline]
pub fn mix(key: u64, word: u64) -> u64 {
    splitmix64(key ^ splitmix64(word))
}

/// Stream for a (seed, speed-band) pair. Bands are identified by the bit
/// patterns of their bounds so a chain of refinements replays identically
/// no matter how the sample object was obtained.
pub fn band_rng(seed: u64, lo: f64, hi: f64) -> ChaCha12Rng {
    let key = mix(mix(seed, lo.to_bits()), hi.to_bits());
    ChaCha12Rng::seed_from_u64(key)
}

/// Stream for replicate `index` of an experiment.
pub fn replicate_seed(base: u64, index: u64) -> u64 {
    base ^ index
}

/// Stream keyed by an arbitrary label, for draws that are not part of the
/// line process itself (endpoint placement, point patterns, ...).
pub fn labeled_rng(seed: u64, label: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(mix(seed, label))
}

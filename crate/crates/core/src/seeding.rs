//! Deterministic splitting of one master seed into independent streams.
//!
//! Stream `(index, stream)` is seeded with
//! `splitmix64(master ^ splitmix64(index ^ splitmix64(stream)))`, so any single
//! replication or chunk can be regenerated without running the others.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Arrivals of status updates.
pub(crate) const STREAM_ARRIVALS: u64 = 1;
/// Per-transmission decoding outcomes.
pub(crate) const STREAM_CHANNEL: u64 = 2;
/// Dynamic-system realizations.
pub(crate) const STREAM_GEOMETRY: u64 = 3;

/// The splitmix64 finalizer.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(master: u64, index: u64, stream: u64) -> u64 {
    splitmix64(master ^ splitmix64(index ^ splitmix64(stream)))
}

pub(crate) fn stream_rng(master: u64, index: u64, stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, index, stream))
}

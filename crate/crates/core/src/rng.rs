//! Deterministic random-stream derivation.
//!
//! Every Monte Carlo routine partitions its work into fixed-size batches and
//! derives one independent ChaCha stream per batch from `(seed, labels...)`.
//! Results are reduced in batch order, so a run is bit-identical for any
//! worker count.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 step; good avalanche, cheap, stable across platforms.
#[inline]
pub fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mix a seed with a sequence of labels (purpose tag, k index, batch index, ...).
pub fn derive_seed(seed: u64, labels: &[u64]) -> u64 {
    let mut s = splitmix64(seed ^ 0x6A09_E667_F3BC_C908);
    for &l in labels {
        s = splitmix64(s ^ splitmix64(l));
    }
    s
}

/// A ChaCha stream for one batch of work.
pub fn stream(seed: u64, labels: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, labels))
}

/// Stable label for a purpose string, so call sites read as text.
pub fn label(tag: &str) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for b in tag.as_bytes() {
        h ^= *b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

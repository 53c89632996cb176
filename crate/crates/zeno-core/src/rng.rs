//! Deterministic per-round random streams.
//!
//! Every campaign round draws from its own ChaCha stream selected by
//! `(seed, round index)`, so serial and parallel execution of the rounds
//! produce identical records. Stage-level seeds for the adaptive schedule
//! are derived with a SplitMix64 mix so that sub-campaigns never share a
//! stream with each other or with their parent.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// RNG for one round: stream `round` of the generator keyed by `seed`.
pub fn round_rng(seed: u64, round: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(round);
    rng
}

/// SplitMix64 finalizer; mixes a domain label into a seed.
pub fn derive_seed(seed: u64, domain: u64) -> u64 {
    let mut z = seed ^ domain.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

//! Deterministic per-trial, per-stream RNG derivation.
//!
//! Every random draw in the harness comes from a ChaCha12 stream whose
//! 256-bit key is derived from `(master_seed, trial, stream)` with the
//! SplitMix64 finalizer:
//!
//! ```text
//! s = mix(mix(mix(master_seed) ^ trial) ^ stream)
//! key = next four SplitMix64 outputs from state s
//! ```
//!
//! The derivation is pure integer arithmetic, so identical configurations
//! reproduce bit-identical draws on any platform and any worker count.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

// SplitMix64 output function (Steele, Lea & Flood's mix constants).
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn next(state: &mut u64) -> u64 {
    *state = state.wrapping_add(GOLDEN);
    mix(*state)
}

/// ChaCha12 stream for `(master_seed, trial, stream)`. Stream 0 is the
/// observation noise; streams `1..=L` are the training members.
pub(crate) fn stream_rng(master_seed: u64, trial: u64, stream: u64) -> ChaCha12Rng {
    let mut state = mix(mix(mix(master_seed) ^ trial) ^ stream);
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&next(&mut state).to_le_bytes());
    }
    ChaCha12Rng::from_seed(key)
}

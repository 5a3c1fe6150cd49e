//! Per-trial random number streams.
//!
//! Each trial owns an independent counter-based stream keyed by
//! `(seed, trial_index)`, so trials can run on any thread in any order and
//! still reproduce bit-identically.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Returns (random, new seed)
fn splitmix64(seed: u64) -> (u64, u64) {
    let newseed = seed.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = newseed;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    (z ^ (z >> 31), newseed)
}

/// Independent stream for one trial. The 256-bit key is expanded from the
/// experiment seed and trial index with splitmix64, so distinct trials never
/// share a stream even for adjacent indices.
pub fn trial_rng(seed: u64, trial_index: u64) -> ChaCha8Rng {
    let mut state = seed ^ trial_index.wrapping_mul(0xd605_bbb5_8c8a_bc03);
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        let (word, next) = splitmix64(state);
        state = next;
        chunk.copy_from_slice(&word.to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

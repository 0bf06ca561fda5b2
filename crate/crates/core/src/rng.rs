//! Named, counter-based random substreams.
//!
//! Every random draw in the pipeline comes from a stream identified by
//! `(seed, name, iteration, index)`, so results do not depend on thread
//! scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const SIMULATE: &str = "simulate";
pub const SMC: &str = "smc";
pub const RESAMPLE: &str = "resample";
pub const PREDICT: &str = "predict";

fn fnv1a(name: &str) -> u64 {
    name.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Independent generator for one `(seed, name, iteration, index)` tuple.
pub fn substream(seed: u64, name: &str, iteration: u64, index: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    let mut state = splitmix64(seed ^ fnv1a(name));
    for (i, word) in [iteration, index, 0x5eed, 0xcafe].into_iter().enumerate() {
        state = splitmix64(state ^ word);
        key[8 * i..8 * i + 8].copy_from_slice(&state.to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

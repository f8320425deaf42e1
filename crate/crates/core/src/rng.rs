//! Counter-based random substreams.
//!
//! Every random draw in the engine comes from a ChaCha8 generator keyed by
//! `(seed, domain)` and positioned on the stream `index`, so a path's draws
//! depend only on its coordinates and never on which worker ran it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent families of draws. Distinct domains never share a key.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamDomain {
    Migration,
    Reference,
    CoverStress,
    Test,
}

impl StreamDomain {
    fn tag(self) -> u64 {
        match self {
            StreamDomain::Migration => 0x6d69_6772_6174_696f,
            StreamDomain::Reference => 0x7265_6665_7265_6e63,
            StreamDomain::CoverStress => 0x636f_7665_7273_7472,
            StreamDomain::Test => 0x7465_7374_7465_7374,
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Generator for substream `index` of `domain` under `seed`.
pub fn substream(seed: u64, domain: StreamDomain, index: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    let mut state = seed ^ domain.tag();
    for chunk in key.chunks_exact_mut(8) {
        state = splitmix64(state);
        chunk.copy_from_slice(&state.to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index);
    rng
}

//! Keyed random substreams.
//!
//! Every stochastic step draws from its own ChaCha8 stream derived from
//! `(seed, domain, a, b)`. Streams never depend on evaluation order, so
//! generation can be split across threads and still reproduce bit-for-bit.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Domain tags keep substreams of different stages apart even when the
/// remaining key components coincide.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    Citizen = 0x4349_5449,
    Rating = 0x5241_5449,
    Holdout = 0x484f_4c44,
}

#[inline]
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Returns the generator for one keyed substream.
pub fn substream(seed: u64, domain: Domain, a: u64, b: u64) -> ChaCha8Rng {
    let mut state = seed;
    for part in [domain as u64, a, b] {
        state = splitmix64(&mut state) ^ part;
    }
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

//! Counter-based uniform streams.
//!
//! Every random quantity in the crate comes from a ChaCha8 stream keyed
//! by a 64-bit seed, with the 64-bit stream id selecting an independent
//! substream. A path position consumes a fixed number of words at a
//! fixed offset within its stream, so each draw is a pure function of
//! (seed, stream, index): extending a path never perturbs its prefix and
//! distinct replicates never share words.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub(crate) fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Fold several labels into one stream id.
pub(crate) fn derive_stream(parts: &[u64]) -> u64 {
    let mut h = 0x9E37_79B9_7F4A_7C15u64;
    for &p in parts {
        h = splitmix64(h ^ p);
    }
    h
}

fn chacha_key(seed: u64) -> [u8; 32] {
    let mut key = [0u8; 32];
    let mut s = seed;
    for chunk in key.chunks_exact_mut(8) {
        s = splitmix64(s);
        chunk.copy_from_slice(&s.to_le_bytes());
    }
    key
}

/// Sequential reader over one (seed, stream) substream.
pub(crate) struct UniformStream {
    rng: ChaCha8Rng,
}

impl UniformStream {
    pub(crate) fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::from_seed(chacha_key(seed));
        rng.set_stream(stream);
        rng.set_word_pos(0);
        UniformStream { rng }
    }

    pub(crate) fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform draw in the open interval (0, 1).
    pub(crate) fn next_open01(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / 9_007_199_254_740_992.0)
    }
}

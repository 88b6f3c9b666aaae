//! Counter-based splittable random streams.
//!
//! Every stream is a ChaCha8 keystream addressed by `(seed, stream id)`. The
//! keystream position is the counter, so two streams with different ids never
//! overlap and a stream's output does not depend on which thread draws it.
//! Child ids are derived from the parent id and a per-parent ordinal, which
//! keeps particle streams independent of processing order.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finaliser.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Key of the `ordinal`-th child stream of `parent`.
#[inline]
pub fn child_key(parent: u64, ordinal: u64) -> u64 {
    mix64(parent ^ mix64(ordinal.wrapping_mul(0xD1B5_4A32_D192_ED03)))
}

/// Reserved stream ids for non-particle draws.
pub mod streams {
    pub const INITIAL_PROFILE: u64 = 0xFFFF_FFFF_0000_0001;
    pub const LABELS: u64 = 0xFFFF_FFFF_0000_0002;
    pub const SAMPLING: u64 = 0xFFFF_FFFF_0000_0003;
}

#[derive(Clone, Debug)]
pub struct StreamRng {
    inner: ChaCha8Rng,
}

impl StreamRng {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut key = [0u8; 32];
        let mut word = seed;
        for chunk in key.chunks_exact_mut(8) {
            word = mix64(word);
            chunk.copy_from_slice(&word.to_le_bytes());
        }
        let mut inner = ChaCha8Rng::from_seed(key);
        inner.set_stream(stream);
        Self { inner }
    }

    /// Stream for replicate `index` of an experiment seeded with `seed`.
    pub fn replicate(seed: u64, index: u64) -> Self {
        Self::new(seed, child_key(0x5245_504C, index))
    }
}

impl RngCore for StreamRng {
    #[inline]
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    #[inline]
    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

/// Uniform draw in the open interval (0, 1).
#[inline]
pub fn open01<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

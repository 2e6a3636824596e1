//! Seeded, splittable random number streams.
//!
//! All samplers in this crate draw from [`RngStream`], a thin wrapper around
//! the ChaCha12 counter-based generator.  Two properties matter here:
//!
//! 1. **Reproducibility** — a stream is a pure function of its 32-byte seed.
//!    The generator algorithm is pinned (ChaCha with 12 rounds), so the same
//!    seed yields the same draws on every platform and in every release.
//! 2. **Splittability** — [`RngStream::split`] derives the `i`-th child
//!    stream from the *seed* (not from the current position) of its parent.
//!    Child streams are statistically independent of each other and of the
//!    parent, and the derivation is deterministic, so per-examinee streams
//!    can be handed to worker threads in any order without affecting the
//!    values drawn.
//!
//! Splitting re-keys rather than merely re-streaming: the child's seed is
//! generated by running the parent's ChaCha key on stream `i` and taking 32
//! bytes of output.  Children therefore occupy unrelated keys, and splitting
//! a child can never collide with a sibling of the parent (which could
//! happen if splits only incremented a shared stream counter).

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;

/// Multiplicative constants of the SplitMix64 scrambler, used to spread a
/// 64-bit seed over the full 256-bit ChaCha key space.
const SPLITMIX_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;
const SPLITMIX_MUL1: u64 = 0xBF58_476D_1CE4_E5B9;
const SPLITMIX_MUL2: u64 = 0x94D0_49BB_1331_11EB;

/// One SplitMix64 step: advance `state` and return the next scrambled value.
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(SPLITMIX_GAMMA);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(SPLITMIX_MUL1);
    z = (z ^ (z >> 27)).wrapping_mul(SPLITMIX_MUL2);
    z ^ (z >> 31)
}

/// A reproducible, splittable random number stream.
///
/// Implements [`RngCore`], so any `rand`/`rand_distr` distribution can
/// sample from it directly.
#[derive(Debug, Clone)]
pub struct RngStream {
    /// The 32-byte key this stream was created from; retained so that
    /// [`split`](Self::split) is independent of how much has been drawn.
    seed: [u8; 32],
    rng: ChaCha12Rng,
}

impl RngStream {
    /// Creates a stream from a user-facing 64-bit seed.
    ///
    /// The seed is expanded to 256 bits with SplitMix64 so that nearby
    /// integer seeds (0, 1, 2, …) produce unrelated keys.
    pub fn from_u64(seed: u64) -> Self {
        let mut state = seed;
        let mut key = [0u8; 32];
        for chunk in key.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        Self::from_seed_bytes(key)
    }

    /// Creates a stream from a full 32-byte key.
    pub fn from_seed_bytes(seed: [u8; 32]) -> Self {
        RngStream {
            seed,
            rng: ChaCha12Rng::from_seed(seed),
        }
    }

    /// Returns the 32-byte key of this stream.
    pub fn seed_bytes(&self) -> [u8; 32] {
        self.seed
    }

    /// Derives the `index`-th child stream.
    ///
    /// The child is a pure function of `(parent seed, index)`.  Drawing from
    /// the parent before or after splitting does not change the child.
    pub fn split(&self, index: u64) -> RngStream {
        let mut derive = ChaCha12Rng::from_seed(self.seed);
        derive.set_stream(index);
        let mut child_seed = [0u8; 32];
        derive.fill_bytes(&mut child_seed);
        Self::from_seed_bytes(child_seed)
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.rng.fill_bytes(dest)
    }
}

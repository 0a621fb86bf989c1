use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A reproducible random-number stream identified by `(seed, index)`.
///
/// Backed by ChaCha8 with the stream index mapped onto the cipher nonce, so
/// stream `k` is reachable in O(1) without generating its predecessors.
/// Streams are cheap to create and should not be shared between threads;
/// spawn one per work unit instead.
#[derive(Clone, Debug)]
pub struct RngStream {
    seed: u64,
    index: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, index: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        Self { seed, index, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn index(&self) -> u64 {
        self.index
    }

    /// Uniform draw on the open interval (0, 1).
    #[inline]
    pub fn open01(&mut self) -> f64 {
        // 52 random mantissa bits offset by half an ulp keeps both ends excluded.
        ((self.rng.next_u64() >> 12) as f64 + 0.5) * (1.0 / (1u64 << 52) as f64)
    }
}

impl RngCore for RngStream {
    #[inline]
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    #[inline]
    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

/// Returns the stream for `(seed, index)`.
pub fn spawn_stream(seed: u64, index: u64) -> RngStream {
    RngStream::new(seed, index)
}

/// Stream families used internally, so that e.g. replication 7 of a sweep and
/// bootstrap resample 7 never share randomness.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Replication = 1,
    QuantilePrepass = 2,
    Bootstrap = 3,
    Permutation = 4,
    RenewalReward = 5,
    TimeAverage = 6,
    Stationary = 7,
}

/// Stream index for work unit `unit` of the given purpose.
pub fn stream_index(purpose: Purpose, unit: u64) -> u64 {
    debug_assert!(unit < 1 << 48);
    ((purpose as u64) << 48) | unit
}

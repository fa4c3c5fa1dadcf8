//! Counter-based random streams.
//!
//! Every draw is fixed by a `(seed, stream id, counter)` triple: the seed
//! selects the ChaCha key, the stream id selects the ChaCha nonce, and the
//! counter is the word position inside that stream. Streams with different
//! ids never overlap, so parallel workers can each own one without
//! coordination.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type RandomStream = ChaCha8Rng;

/// Purpose tags kept in the top 16 bits of the stream id so that different
/// consumers of one seed never share a stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u16)]
pub enum Purpose {
    NomaTrials = 1,
    TdmaTrials = 2,
    ConditionalMc = 3,
    SamplerCheck = 4,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamKey {
    pub seed: u64,
    pub stream: u64,
}

impl StreamKey {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    /// Stream `index` within the namespace of `purpose`.
    pub fn tagged(seed: u64, purpose: Purpose, index: u64) -> Self {
        debug_assert!(index < 1 << 48);
        Self::new(seed, ((purpose as u64) << 48) | index)
    }

    /// Generator positioned at the start of the stream.
    pub fn rng(&self) -> RandomStream {
        self.at(0)
    }

    /// Generator positioned at 32-bit word `counter` of the stream.
    pub fn at(&self, counter: u128) -> RandomStream {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng.set_word_pos(counter);
        rng
    }
}

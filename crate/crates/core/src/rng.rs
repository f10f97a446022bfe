//! Seeded random streams.
//!
//! Every generator draws from a ChaCha8 stream keyed by the user seed. The
//! 64-bit ChaCha stream id is split into a 16-bit purpose tag and a 48-bit
//! index (sample, column, trial), so each row of a design matrix or each
//! oracle trial gets its own substream. Output therefore never depends on
//! iteration order or on how work is scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u16)]
pub enum Purpose {
    Design = 1,
    Truth = 2,
    Noise = 3,
    Concavity = 4,
    AssumptionPairs = 5,
    Test = 0xff,
}

const INDEX_BITS: u32 = 48;

/// Substream `index` of `purpose` under `seed`.
pub fn substream(seed: u64, purpose: Purpose, index: u64) -> ChaCha8Rng {
    debug_assert!(index < (1u64 << INDEX_BITS));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((purpose as u64) << INDEX_BITS) | index);
    rng
}

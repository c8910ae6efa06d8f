//! Seed splitting.
//!
//! Every random stream in a run is derived from one master seed by
//! [`split_seed`]: `split_seed(seed, i) = splitmix64(seed ^ splitmix64(i + φ))`
//! with φ the 64-bit golden-ratio constant, and seeds a ChaCha8 generator.
//! Streams are keyed by position (episode, role, user), never by thread, so
//! results do not depend on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn split_seed(seed: u64, stream: u64) -> u64 {
    splitmix64(seed ^ splitmix64(stream.wrapping_add(GOLDEN)))
}

/// Generator for stream `stream` of `seed`.
pub fn substream(seed: u64, stream: u64) -> SimRng {
    SimRng::seed_from_u64(split_seed(seed, stream))
}

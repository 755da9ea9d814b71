//! Seeded random streams.
//!
//! All randomness goes through ChaCha8 (the `rand_chacha` generator): a counter-based
//! stream cipher whose output is fully specified, so a seed reproduces the same draws on
//! every platform. A run derives independent streams from one user seed by selecting the
//! ChaCha stream id, one id per purpose:
//!
//! | stream | purpose                              |
//! |--------|--------------------------------------|
//! | 0      | synthetic features                   |
//! | 1      | synthetic responses, labels, noise   |
//! | 2      | true coefficients / class geometry   |
//! | 3      | label masking for semi-supervised    |
//! | 16     | initial clustering sample            |

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const STREAM_FEATURES: u64 = 0;
pub const STREAM_RESPONSE: u64 = 1;
pub const STREAM_GEOMETRY: u64 = 2;
pub const STREAM_MASK: u64 = 3;
pub const STREAM_CLUSTER_SAMPLE: u64 = 16;

pub type Rng = ChaCha8Rng;

pub fn stream(seed: u64, stream: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

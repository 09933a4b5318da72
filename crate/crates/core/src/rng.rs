//! Per-path random streams.
//!
//! ChaCha is a counter-based generator: a (seed, stream) pair addresses an
//! independent sequence, so path k draws the same numbers no matter which
//! thread runs it or in which order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Purposes get separate streams so that, for example, the Parisian clocks
/// can be switched off without shifting the driving noise.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Purpose {
    Noise = 0,
    Discount = 1,
    Parisian = 2,
}

const PURPOSES: u64 = 4;

pub fn stream(seed: u64, path: u64, purpose: Purpose) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path.wrapping_mul(PURPOSES).wrapping_add(purpose as u64));
    rng
}

/// The three streams a simulated path uses.
pub struct PathStreams {
    pub noise: ChaCha8Rng,
    pub discount: ChaCha8Rng,
    pub parisian: ChaCha8Rng,
}

impl PathStreams {
    pub fn new(seed: u64, path: u64) -> Self {
        PathStreams {
            noise: stream(seed, path, Purpose::Noise),
            discount: stream(seed, path, Purpose::Discount),
            parisian: stream(seed, path, Purpose::Parisian),
        }
    }
}

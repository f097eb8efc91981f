//! Seed derivation and independent random streams.
//!
//! One root seed feeds several named ChaCha streams so that changing how
//! many draws one subsystem makes never shifts another subsystem's draws.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Order-sensitive mix of several words into one seed.
pub fn mix_seed(parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(0x5441_5345_525f_5349, |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Placement,
    Noise,
    Nonces,
    GhostOffsets,
}

impl Stream {
    fn tag(self) -> u64 {
        match self {
            Stream::Placement => 1,
            Stream::Noise => 2,
            Stream::Nonces => 3,
            Stream::GhostOffsets => 4,
        }
    }
}

pub fn stream(root_seed: u64, which: Stream) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix_seed(&[root_seed, which.tag()]))
}

#[derive(Debug, Clone)]
pub struct Streams {
    pub placement: ChaCha8Rng,
    pub noise: ChaCha8Rng,
    pub nonces: ChaCha8Rng,
    pub ghost_offsets: ChaCha8Rng,
}

impl Streams {
    pub fn new(root_seed: u64) -> Self {
        Self {
            placement: stream(root_seed, Stream::Placement),
            noise: stream(root_seed, Stream::Noise),
            nonces: stream(root_seed, Stream::Nonces),
            ghost_offsets: stream(root_seed, Stream::GhostOffsets),
        }
    }
}

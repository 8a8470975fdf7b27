//! Seed derivation. Every random draw in a run descends from one global seed
//! through [`SeedTree`], so multi-reservoir runs stay reproducible no matter
//! how work is scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// A node in a deterministic seed hierarchy.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SeedTree {
    seed: u64,
}

impl SeedTree {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Child node for `label`; distinct labels give independent streams.
    pub fn child(&self, label: u64) -> SeedTree {
        SeedTree {
            seed: splitmix64(self.seed ^ splitmix64(label.wrapping_add(0x5851_F42D_4C95_7F2D))),
        }
    }

    pub fn rng(&self) -> Rng {
        Rng::seed_from_u64(self.seed)
    }
}

pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stream labels used across the crate.
pub mod streams {
    pub const RESERVOIR: u64 = 1;
    pub const SUBSAMPLE: u64 = 2;
    pub const MEMORY_INPUT: u64 = 3;
    pub const SEARCH: u64 = 4;
}

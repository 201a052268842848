//! Seed derivation.
//!
//! A single run seed fans out to per-component seeds by hashing a path of
//! labels and indices through SplitMix64. Derivation depends only on the path,
//! never on the order in which components ask for their seeds.

use rand::SeedableRng;

pub type Rng = rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SeedTree {
    state: u64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a(label: &str) -> u64 {
    label.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01B3)
    })
}

impl SeedTree {
    pub fn new(seed: u64) -> Self {
        SeedTree {
            state: splitmix64(seed),
        }
    }

    pub fn child(&self, label: &str) -> SeedTree {
        SeedTree {
            state: splitmix64(self.state ^ fnv1a(label)),
        }
    }

    pub fn index(&self, i: u64) -> SeedTree {
        SeedTree {
            state: splitmix64(self.state.wrapping_add(splitmix64(i.wrapping_add(1)))),
        }
    }

    pub fn seed(&self) -> u64 {
        self.state
    }

    pub fn rng(&self) -> Rng {
        Rng::seed_from_u64(self.state)
    }
}

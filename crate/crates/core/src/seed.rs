use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

/// Explicit 64-bit seed for one generator call.
///
/// Every randomized operation takes a `Seed` and builds its own
/// counter-based generator from it; there is no global RNG state. The same
/// seed with the same parameters always produces bit-identical output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Seed(pub u64);

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

impl Seed {
    pub fn new(value: u64) -> Self {
        Seed(value)
    }

    /// Fresh counter-based generator for this seed.
    pub fn rng(self) -> ChaCha12Rng {
        ChaCha12Rng::seed_from_u64(self.0)
    }

    /// Derive an independent child seed (splitmix64 finalizer keyed by `tag`).
    /// Distinct tags give streams that never share state with the parent, so
    /// callers can fan out across sub-tasks without coordinating.
    pub fn child(self, tag: u64) -> Seed {
        let mut z = self
            .0
            .wrapping_add(tag.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA));
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        Seed(z ^ (z >> 31))
    }

    pub fn value(self) -> u64 {
        self.0
    }
}

impl From<u64> for Seed {
    fn from(value: u64) -> Self {
        Seed(value)
    }
}

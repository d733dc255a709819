//! Named child-seed derivation.
//!
//! Every randomized stage receives its own seed derived from a parent seed, a
//! stream name and an index. Derived seeds never depend on how many random
//! numbers another stage consumed, so stages can run in any order or in
//! parallel and still produce identical results.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01B3)
    })
}

/// Child seed for stream `name`, element `index` of `parent`.
pub fn derive_seed(parent: u64, name: &str, index: u64) -> u64 {
    let h = splitmix64(parent ^ fnv1a(name).rotate_left(17));
    splitmix64(h ^ splitmix64(index.wrapping_add(0x5851_F42D_4C95_7F2D)))
}

pub fn rng_from_seed(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Shorthand for `rng_from_seed(derive_seed(..))`.
pub fn child_rng(parent: u64, name: &str, index: u64) -> Rng {
    rng_from_seed(derive_seed(parent, name, index))
}

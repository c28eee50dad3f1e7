//! Seed derivation. Every stochastic stage draws from a ChaCha stream whose
//! seed is a pure function of the run seed and the stage coordinates, so
//! results do not depend on thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mix a base seed with a stage label and integer coordinates.
pub fn derive_seed(seed: u64, label: &str, coords: &[u64]) -> u64 {
    let mut acc = splitmix(seed);
    for b in label.bytes() {
        acc = splitmix(acc ^ u64::from(b));
    }
    for &c in coords {
        acc = splitmix(acc ^ c);
    }
    acc
}

pub fn stream(seed: u64, label: &str, coords: &[u64]) -> Rng {
    Rng::seed_from_u64(derive_seed(seed, label, coords))
}

/// 64-bit FNV-1a, stable across platforms and releases.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

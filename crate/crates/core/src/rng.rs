//! Seeded random streams.
//!
//! Every random quantity is drawn from an explicitly seeded ChaCha8 stream that
//! the caller owns. Independent streams are derived from a base seed and a list
//! of integer tags: the derived seed is the first eight bytes (little endian) of
//! `SHA-256(base ‖ tag_0 ‖ tag_1 ‖ …)` with every value encoded as a
//! little-endian `u64`. Derivation does not depend on evaluation order, so
//! parallel sweeps reproduce sequential ones exactly.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type SimRng = ChaCha8Rng;

pub fn derive_seed(base: u64, tags: &[u64]) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(base.to_le_bytes());
    for t in tags {
        hasher.update(t.to_le_bytes());
    }
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}

pub fn rng_from_seed(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}

pub fn derived_rng(base: u64, tags: &[u64]) -> SimRng {
    rng_from_seed(derive_seed(base, tags))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn derivation_is_stable_and_tag_sensitive() {
        assert_eq!(derive_seed(7, &[1, 2]), derive_seed(7, &[1, 2]));
        assert_ne!(derive_seed(7, &[1, 2]), derive_seed(7, &[2, 1]));
        assert_ne!(derive_seed(7, &[1]), derive_seed(8, &[1]));
        let a: u64 = derived_rng(3, &[4]).random();
        let b: u64 = derived_rng(3, &[4]).random();
        assert_eq!(a, b);
    }
}

//! Seeded random streams.
//!
//! Every random quantity in the crate is drawn from a [`ChaCha8Rng`]. Derived
//! seeds (per cell, per trial, per resampling attempt) come from SHA-256 over
//! a labelled little-endian encoding, so a seed recorded in a report can be
//! replayed in isolation by any implementation that follows the same recipe.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// Generator identity recorded in every output file.
pub const RNG_NAME: &str = "ChaCha8Rng(rand_chacha 0.3, seed_from_u64)";

pub type WalkRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> WalkRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// First 8 bytes (little endian) of SHA-256 over `label || parts`.
pub fn derive_seed(label: &str, parts: &[&[u8]]) -> u64 {
    let mut h = Sha256::new();
    h.update((label.len() as u64).to_le_bytes());
    h.update(label.as_bytes());
    for part in parts {
        h.update((part.len() as u64).to_le_bytes());
        h.update(part);
    }
    let digest = h.finalize();
    let mut out = [0u8; 8];
    out.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(out)
}

/// Seed of trial `index` below `parent`.
pub fn trial_seed(parent: u64, index: u64) -> u64 {
    derive_seed("trial", &[&parent.to_le_bytes(), &index.to_le_bytes()])
}

/// Seed of grid cell `index` for dimension `d` and probability string `p`.
pub fn cell_seed(master: u64, d: u32, p: &str, index: u64) -> u64 {
    derive_seed(
        "cell",
        &[
            &master.to_le_bytes(),
            &d.to_le_bytes(),
            p.as_bytes(),
            &index.to_le_bytes(),
        ],
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn derived_seeds_are_stable_and_distinct() {
        let a = trial_seed(1, 0);
        assert_eq!(a, trial_seed(1, 0));
        assert_ne!(a, trial_seed(1, 1));
        assert_ne!(a, trial_seed(2, 0));
        assert_ne!(cell_seed(1, 12, "0.6", 0), cell_seed(1, 12, "0.60", 0));
    }

    #[test]
    fn same_seed_same_stream() {
        let mut x = rng_from_seed(99);
        let mut y = rng_from_seed(99);
        for _ in 0..16 {
            assert_eq!(x.gen::<u64>(), y.gen::<u64>());
        }
    }
}

//! Seeded random number generation.
//!
//! Every stochastic step (synthetic data, splits, weight initialisation,
//! batch shuffling and dropout masks) draws from a ChaCha8 stream seeded with
//! a `u64`. ChaCha is a counter-based generator with a fixed, portable output
//! sequence, so runs reproduce across platforms.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type Rng = ChaCha8Rng;

pub fn seeded(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derive a named sub-seed from a master seed (`SHA-256(master || label)`).
pub fn derive_seed(master: u64, label: &str) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(master.to_le_bytes());
    hasher.update(label.as_bytes());
    let digest = hasher.finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

//! Seed derivation. Every random stream in a run comes from one master seed.

use sha2::{Digest, Sha256};

/// First 8 bytes (little endian) of `SHA-256(master_le ‖ purpose ‖ 0x00 ‖ index_le)`.
pub fn seed_split(master: u64, purpose: &str, index: u64) -> u64 {
    let mut h = Sha256::new();
    h.update(master.to_le_bytes());
    h.update(purpose.as_bytes());
    h.update([0u8]);
    h.update(index.to_le_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().unwrap())
}

/// `count` seeds for `purpose`, indices `0..count`.
pub fn seed_list(master: u64, purpose: &str, count: usize) -> Vec<u64> {
    (0..count as u64).map(|i| seed_split(master, purpose, i)).collect()
}

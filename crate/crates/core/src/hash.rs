use num_bigint::BigUint;
use sha2::{Digest, Sha256};

/// A deterministic map from bytes to 256-bit values.
pub trait Hasher256: Send + Sync {
    fn hash(&self, data: &[u8]) -> [u8; 32];
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Sha256Hasher;

impl Hasher256 for Sha256Hasher {
    fn hash(&self, data: &[u8]) -> [u8; 32] {
        Sha256::digest(data).into()
    }
}

pub fn sha256(data: &[u8]) -> [u8; 32] {
    Sha256Hasher.hash(data)
}

/// Interprets a digest as an unsigned big-endian 256-bit integer.
pub fn digest_value(digest: &[u8; 32]) -> BigUint {
    BigUint::from_bytes_be(digest)
}

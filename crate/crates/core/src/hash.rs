//! Key hash tags used for hash-aided list selection and the final
//! authentication comparison.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::gf2::BitVector;

/// Identifier of the only supported digest.
pub const HASH_ALGO_ID: &str = "sha256";

/// Supported tag lengths in bits.
pub const SUPPORTED_TAG_BITS: [u16; 4] = [32, 64, 128, 256];

/// Hash configuration: SHA-256 truncated to `m_bits`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HashConfig {
    m_bits: u16,
}

impl HashConfig {
    pub fn new(m_bits: u16) -> Result<Self> {
        if !SUPPORTED_TAG_BITS.contains(&m_bits) {
            return Err(Error::InvalidParameter(format!(
                "unsupported tag length {m_bits}; expected one of {SUPPORTED_TAG_BITS:?}"
            )));
        }
        Ok(HashConfig { m_bits })
    }

    pub fn m_bits(&self) -> u16 {
        self.m_bits
    }

    pub fn algo_id(&self) -> &'static str {
        HASH_ALGO_ID
    }
}

impl Default for HashConfig {
    fn default() -> Self {
        HashConfig { m_bits: 128 }
    }
}

/// Truncated digest of a key.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct HashTag {
    m_bits: u16,
    digest: BitVector,
    algo_id: String,
}

impl HashTag {
    pub fn from_parts(m_bits: u16, digest: BitVector, algo_id: &str) -> Result<Self> {
        HashConfig::new(m_bits)?;
        if digest.len() != m_bits as usize {
            return Err(Error::Dimension {
                expected: m_bits as usize,
                actual: digest.len(),
            });
        }
        if algo_id != HASH_ALGO_ID {
            return Err(Error::Format {
                what: "hash tag",
                reason: format!("unknown hash algorithm {algo_id:?}"),
            });
        }
        Ok(HashTag {
            m_bits,
            digest,
            algo_id: algo_id.to_string(),
        })
    }

    pub fn m_bits(&self) -> u16 {
        self.m_bits
    }

    pub fn digest(&self) -> &BitVector {
        &self.digest
    }

    pub fn algo_id(&self) -> &str {
        &self.algo_id
    }

    pub fn config(&self) -> HashConfig {
        HashConfig {
            m_bits: self.m_bits,
        }
    }

    /// Whether `key` hashes to this tag.
    pub fn matches(&self, key: &BitVector) -> bool {
        hash_bits(key, self.config()) == self.digest
    }
}

fn hash_bits(key: &BitVector, cfg: HashConfig) -> BitVector {
    let mut h = Sha256::new();
    h.update((key.len() as u64).to_be_bytes());
    h.update(key.to_bytes_msb());
    let digest = h.finalize();
    let bytes = &digest[..cfg.m_bits as usize / 8];
    BitVector::from_bytes_msb(bytes, cfg.m_bits as usize).expect("whole bytes")
}

/// Tag of `key`: SHA-256 over an 8-byte big-endian bit count followed by
/// the MSB-first packed key bits, truncated to the configured length.
pub fn hash_key(key: &BitVector, cfg: HashConfig) -> HashTag {
    HashTag {
        m_bits: cfg.m_bits,
        digest: hash_bits(key, cfg),
        algo_id: HASH_ALGO_ID.to_string(),
    }
}

//! Block headers for both block species and their canonical byte encoding.
//!
//! The encoding is fixed so that ids are portable:
//!
//! ```text
//! parent_id      32 bytes
//! kind            1 byte   (0 = work, 1 = stake)
//! height          u64 big-endian
//! timestamp       f64 bits, big-endian
//! difficulty      f64 bits, big-endian
//! producer_id     u32 big-endian length + UTF-8 bytes
//! work:  nonce    u32 big-endian length (always 32) + 32 bytes
//! stake: seed     32 bytes
//! ```
//!
//! The id of a block is SHA-256 of that encoding. For work blocks the id is
//! also the proof-of-work hash, since the nonce is the final field.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::hash::{Hasher256, Sha256Hasher};

pub const NONCE_LEN: usize = 32;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BlockError {
    #[error("work block nonce must be {NONCE_LEN} bytes, got {0}")]
    NonceLength(usize),
    #[error("difficulty must be finite and positive, got {0}")]
    Difficulty(f64),
    #[error("timestamp must be finite and non-negative, got {0}")]
    Timestamp(f64),
    #[error("{0}")]
    MixedProof(&'static str),
    #[error("invalid hex in field `{field}`: {reason}")]
    Hex { field: &'static str, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BlockKind {
    Work,
    Stake,
}

impl BlockKind {
    pub fn opposite(self) -> Self {
        match self {
            BlockKind::Work => BlockKind::Stake,
            BlockKind::Stake => BlockKind::Work,
        }
    }

    fn tag(self) -> u8 {
        match self {
            BlockKind::Work => 0,
            BlockKind::Stake => 1,
        }
    }
}

impl fmt::Display for BlockKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BlockKind::Work => "work",
            BlockKind::Stake => "stake",
        })
    }
}

macro_rules! hash256_newtype {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
        pub struct $name(pub [u8; 32]);

        impl $name {
            pub const ZERO: Self = Self([0u8; 32]);

            pub fn as_bytes(&self) -> &[u8; 32] {
                &self.0
            }

            pub fn to_hex(&self) -> String {
                hex::encode(self.0)
            }

            pub fn from_hex(s: &str) -> Result<Self, hex::FromHexError> {
                let mut out = [0u8; 32];
                hex::decode_to_slice(s, &mut out)?;
                Ok(Self(out))
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.to_hex())
            }
        }

        impl fmt::Debug for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}({})", stringify!($name), &self.to_hex()[..16])
            }
        }

        impl Serialize for $name {
            fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                s.serialize_str(&self.to_hex())
            }
        }

        impl<'de> Deserialize<'de> for $name {
            fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
                let s = String::deserialize(d)?;
                Self::from_hex(&s).map_err(serde::de::Error::custom)
            }
        }
    };
}

hash256_newtype!(
    /// SHA-256 of a block's canonical encoding.
    BlockId
);
hash256_newtype!(
    /// Per-stake-block randomness, chained from the previous stake block.
    Seed
);

/// Kind-specific proof carried by a block.
#[derive(Debug, Clone, PartialEq)]
pub enum Proof {
    Work { nonce: Vec<u8> },
    Stake { seed: Seed },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub parent_id: BlockId,
    pub height: u64,
    /// Seconds.
    pub timestamp: f64,
    /// `d_w` for work blocks, `d_s` for stake blocks.
    pub difficulty: f64,
    pub producer_id: String,
    pub proof: Proof,
}

impl Block {
    pub fn kind(&self) -> BlockKind {
        match self.proof {
            Proof::Work { .. } => BlockKind::Work,
            Proof::Stake { .. } => BlockKind::Stake,
        }
    }

    pub fn nonce(&self) -> Option<&[u8]> {
        match &self.proof {
            Proof::Work { nonce } => Some(nonce),
            Proof::Stake { .. } => None,
        }
    }

    pub fn seed(&self) -> Option<&Seed> {
        match &self.proof {
            Proof::Stake { seed } => Some(seed),
            Proof::Work { .. } => None,
        }
    }

    pub fn check_structure(&self) -> Result<(), BlockError> {
        if !(self.difficulty.is_finite() && self.difficulty > 0.0) {
            return Err(BlockError::Difficulty(self.difficulty));
        }
        if !(self.timestamp.is_finite() && self.timestamp >= 0.0) {
            return Err(BlockError::Timestamp(self.timestamp));
        }
        if let Proof::Work { nonce } = &self.proof {
            if nonce.len() != NONCE_LEN {
                return Err(BlockError::NonceLength(nonce.len()));
            }
        }
        Ok(())
    }

    /// Everything except the trailing nonce bytes (work) or seed (stake).
    pub fn header_bytes(&self) -> Vec<u8> {
        let producer = self.producer_id.as_bytes();
        let mut out = Vec::with_capacity(32 + 1 + 8 * 3 + 4 + producer.len() + 4);
        out.extend_from_slice(&self.parent_id.0);
        out.push(self.kind().tag());
        out.extend_from_slice(&self.height.to_be_bytes());
        out.extend_from_slice(&self.timestamp.to_bits().to_be_bytes());
        out.extend_from_slice(&self.difficulty.to_bits().to_be_bytes());
        out.extend_from_slice(&(producer.len() as u32).to_be_bytes());
        out.extend_from_slice(producer);
        if let Proof::Work { nonce } = &self.proof {
            out.extend_from_slice(&(nonce.len() as u32).to_be_bytes());
        }
        out
    }

    pub fn canonical_bytes(&self) -> Result<Vec<u8>, BlockError> {
        self.check_structure()?;
        let mut out = self.header_bytes();
        match &self.proof {
            Proof::Work { nonce } => out.extend_from_slice(nonce),
            Proof::Stake { seed } => out.extend_from_slice(&seed.0),
        }
        Ok(out)
    }

    pub fn id(&self) -> Result<BlockId, BlockError> {
        self.id_with(&Sha256Hasher)
    }

    pub fn id_with(&self, hasher: &dyn Hasher256) -> Result<BlockId, BlockError> {
        Ok(BlockId(hasher.hash(&self.canonical_bytes()?)))
    }
}

/// Free-function form of [`Block::id`].
pub fn block_id(block: &Block) -> Result<BlockId, BlockError> {
    block.id()
}

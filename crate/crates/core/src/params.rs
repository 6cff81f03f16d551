use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::block::{Block, BlockId, Proof, Seed};
use crate::hash::sha256;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamError {
    #[error("`{name}` must be {requirement}, got {value}")]
    OutOfRange {
        name: &'static str,
        requirement: &'static str,
        value: f64,
    },
}

impl ParamError {
    pub(crate) fn new(name: &'static str, requirement: &'static str, value: f64) -> Self {
        ParamError::OutOfRange {
            name,
            requirement,
            value,
        }
    }
}

/// How rule (d) of block validation treats work blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PowMode {
    /// The nonce must satisfy the hash puzzle.
    #[default]
    Hash,
    /// Solve times are sampled analytically and nonces are not ground;
    /// the puzzle check is skipped. Used for simulated chains.
    Sampled,
}

/// Protocol tunables. Field names in JSON follow the scenario schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolParams {
    /// Target block time in seconds.
    #[serde(rename = "T")]
    pub target_block_time: f64,
    /// Exponential rate, 1/seconds.
    pub lambda: f64,
    /// Learning rate of the difficulty controller.
    pub alpha: f64,
    /// Blocks before unlocked stake becomes liquid again.
    pub unlock_delay: u64,
    pub genesis_d_w: f64,
    pub genesis_d_s: f64,
    /// Previous-seed stand-in for the first stake block.
    pub genesis_seed_0: Seed,
    /// Carried as the genesis block's nonce.
    pub genesis_seed_1: Seed,
    pub max_future_drift: f64,
    #[serde(default)]
    pub pow_mode: PowMode,
}

pub const DEFAULT_TARGET_BLOCK_TIME: f64 = 10.0;
pub const DEFAULT_ALPHA: f64 = 0.02;
pub const DEFAULT_UNLOCK_DELAY: u64 = 30;
pub const DEFAULT_GENESIS_DIFFICULTY: f64 = 5.0e6;

pub fn default_genesis_seeds() -> (Seed, Seed) {
    (
        Seed(sha256(b"interleave/genesis-seed/0")),
        Seed(sha256(b"interleave/genesis-seed/1")),
    )
}

impl Default for ProtocolParams {
    fn default() -> Self {
        let (s0, s1) = default_genesis_seeds();
        ProtocolParams {
            target_block_time: DEFAULT_TARGET_BLOCK_TIME,
            lambda: 1.0 / DEFAULT_TARGET_BLOCK_TIME,
            alpha: DEFAULT_ALPHA,
            unlock_delay: DEFAULT_UNLOCK_DELAY,
            genesis_d_w: DEFAULT_GENESIS_DIFFICULTY,
            genesis_d_s: DEFAULT_GENESIS_DIFFICULTY,
            genesis_seed_0: s0,
            genesis_seed_1: s1,
            max_future_drift: 1.0,
            pow_mode: PowMode::Hash,
        }
    }
}

impl ProtocolParams {
    /// Defaults with `T` set and `lambda = 1/T`.
    pub fn with_target_block_time(target_block_time: f64) -> Result<Self, ParamError> {
        let params = ProtocolParams {
            target_block_time,
            lambda: 1.0 / target_block_time,
            ..Default::default()
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        let positive = |name, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(ParamError::new(name, "finite and > 0", v))
            }
        };
        positive("T", self.target_block_time)?;
        positive("lambda", self.lambda)?;
        positive("alpha", self.alpha)?;
        positive("genesis_d_w", self.genesis_d_w)?;
        positive("genesis_d_s", self.genesis_d_s)?;
        if self.genesis_d_w < 1.0 {
            return Err(ParamError::new("genesis_d_w", ">= 1", self.genesis_d_w));
        }
        if !(self.max_future_drift.is_finite() && self.max_future_drift >= 0.0) {
            return Err(ParamError::new(
                "max_future_drift",
                "finite and >= 0",
                self.max_future_drift,
            ));
        }
        Ok(())
    }

    /// The single work-kind root every chain descends from.
    pub fn genesis_block(&self) -> Block {
        Block {
            parent_id: BlockId::ZERO,
            height: 0,
            timestamp: 0.0,
            difficulty: self.genesis_d_w,
            producer_id: "genesis".to_string(),
            proof: Proof::Work {
                nonce: self.genesis_seed_1.0.to_vec(),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lambda_is_derived_from_t() {
        let p = ProtocolParams::with_target_block_time(20.0).unwrap();
        assert_eq!(p.lambda, 0.05);
        assert!(ProtocolParams::with_target_block_time(0.0).is_err());
    }

    #[test]
    fn rejects_non_positive_alpha() {
        let p = ProtocolParams {
            alpha: 0.0,
            ..Default::default()
        };
        assert!(p.validate().is_err());
    }

    #[test]
    fn json_uses_schema_names() {
        let v = serde_json::to_value(ProtocolParams::default()).unwrap();
        assert_eq!(v["T"], 10.0);
        assert_eq!(v["pow_mode"], "hash");
        let back: ProtocolParams = serde_json::from_value(v).unwrap();
        assert_eq!(back, ProtocolParams::default());
    }
}

//! Consensus rules for a candidate block.
//!
//! Rules are checked in a fixed order and the first failure is reported:
//! parent known, interleaving, difficulty, proof of work, stake seed and
//! wait time, future drift, then timestamp/height monotonicity.

use std::fmt;

use thiserror::Error;

use crate::block::{Block, BlockId, BlockKind, Proof};
use crate::difficulty::next_difficulty;
use crate::hash::{Hasher256, Sha256Hasher};
use crate::ledger::StakeLedger;
use crate::params::{PowMode, ProtocolParams};
use crate::pos::{
    earliest_timestamp, seed_draw_with, wait_time_from_draw, HashSeedSigner, SeedSigner,
};
use crate::pow::verify_pow_with;
use crate::store::{ChainStore, InsertOutcome, StoreError};

/// Relative tolerance when comparing a block's difficulty to the recomputed one.
pub const DIFFICULTY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ValidationError {
    #[error("{kind} block on {parent_kind} parent")]
    InterleaveViolation {
        kind: BlockKind,
        parent_kind: BlockKind,
    },
    #[error("hash does not meet target for d_w={difficulty}")]
    BadProofOfWork { difficulty: f64 },
    #[error("seed {seed} does not verify against previous seed {prev_seed} for `{producer}`")]
    BadSeed {
        seed: String,
        prev_seed: String,
        producer: String,
    },
    #[error("timestamp {timestamp} earlier than {earliest} (wait {wait})")]
    TooEarly {
        timestamp: f64,
        earliest: f64,
        wait: f64,
    },
    #[error("timestamp {timestamp} beyond clock {clock} + drift {drift}")]
    FutureBlock {
        timestamp: f64,
        clock: f64,
        drift: f64,
    },
    #[error("difficulty {got} differs from required {expected}")]
    BadDifficulty { got: f64, expected: f64 },
    #[error("unknown parent {0}")]
    UnknownParent(BlockId),
    #[error("{0}")]
    StructuralError(String),
}

impl ValidationError {
    pub fn variant_name(&self) -> &'static str {
        match self {
            ValidationError::InterleaveViolation { .. } => "InterleaveViolation",
            ValidationError::BadProofOfWork { .. } => "BadProofOfWork",
            ValidationError::BadSeed { .. } => "BadSeed",
            ValidationError::TooEarly { .. } => "TooEarly",
            ValidationError::FutureBlock { .. } => "FutureBlock",
            ValidationError::BadDifficulty { .. } => "BadDifficulty",
            ValidationError::UnknownParent(_) => "UnknownParent",
            ValidationError::StructuralError(_) => "StructuralError",
        }
    }
}

impl From<StoreError> for ValidationError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::UnknownParent(id) => ValidationError::UnknownParent(id),
            other => ValidationError::StructuralError(other.to_string()),
        }
    }
}

/// What a node checks a candidate against besides the store itself.
#[derive(Clone, Copy)]
pub struct ValidationContext<'a> {
    pub ledger: &'a StakeLedger,
    pub local_clock: f64,
    pub params: &'a ProtocolParams,
}

impl fmt::Debug for ValidationContext<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ValidationContext")
            .field("local_clock", &self.local_clock)
            .finish_non_exhaustive()
    }
}

/// Validation with pluggable hash and seed-signing schemes.
pub struct Validator {
    hasher: Box<dyn Hasher256>,
    signer: Box<dyn SeedSigner>,
}

impl Default for Validator {
    fn default() -> Self {
        Validator {
            hasher: Box::new(Sha256Hasher),
            signer: Box::new(HashSeedSigner::<Sha256Hasher>::default()),
        }
    }
}

impl Validator {
    pub fn new(hasher: Box<dyn Hasher256>, signer: Box<dyn SeedSigner>) -> Self {
        Validator { hasher, signer }
    }

    pub fn validate(
        &self,
        block: &Block,
        store: &ChainStore,
        ctx: &ValidationContext<'_>,
    ) -> Result<(), ValidationError> {
        block
            .check_structure()
            .map_err(|e| ValidationError::StructuralError(e.to_string()))?;
        let params = ctx.params;

        // (a)
        let parent = store
            .get(&block.parent_id)
            .ok_or(ValidationError::UnknownParent(block.parent_id))?;

        // (b)
        let kind = block.kind();
        if kind == parent.kind() {
            return Err(ValidationError::InterleaveViolation {
                kind,
                parent_kind: parent.kind(),
            });
        }

        // (c)
        let expected = next_difficulty(store, &block.parent_id, kind, params)?;
        if (block.difficulty - expected).abs() > DIFFICULTY_TOLERANCE * expected.abs() {
            return Err(ValidationError::BadDifficulty {
                got: block.difficulty,
                expected,
            });
        }

        match &block.proof {
            // (d)
            Proof::Work { nonce } => {
                if params.pow_mode == PowMode::Hash {
                    let ok = verify_pow_with(
                        self.hasher.as_ref(),
                        &block.header_bytes(),
                        nonce,
                        block.difficulty,
                    )
                    .map_err(|e| ValidationError::StructuralError(e.to_string()))?;
                    if !ok {
                        return Err(ValidationError::BadProofOfWork {
                            difficulty: block.difficulty,
                        });
                    }
                }
            }
            // (e)
            Proof::Stake { seed } => {
                let prev_seed = store
                    .nearest_of_kind(&block.parent_id, BlockKind::Stake, true)
                    .and_then(|(_, b)| b.seed().copied())
                    .unwrap_or(params.genesis_seed_0);
                if !self.signer.verify(seed, &prev_seed, &block.producer_id) {
                    return Err(ValidationError::BadSeed {
                        seed: seed.to_hex(),
                        prev_seed: prev_seed.to_hex(),
                        producer: block.producer_id.clone(),
                    });
                }
                let stake = ctx.ledger.effective_stake(&block.producer_id, block.height);
                if stake == 0 {
                    return Err(ValidationError::TooEarly {
                        timestamp: block.timestamp,
                        earliest: f64::INFINITY,
                        wait: f64::INFINITY,
                    });
                }
                let wait = wait_time_from_draw(
                    seed_draw_with(self.hasher.as_ref(), seed),
                    stake as f64,
                    block.difficulty,
                )
                .map_err(|e| ValidationError::StructuralError(e.to_string()))?;
                let earliest = earliest_timestamp(parent.timestamp, wait)
                    .map_err(|e| ValidationError::StructuralError(e.to_string()))?;
                if block.timestamp < earliest {
                    return Err(ValidationError::TooEarly {
                        timestamp: block.timestamp,
                        earliest,
                        wait,
                    });
                }
            }
        }

        // (f)
        if block.timestamp > ctx.local_clock + params.max_future_drift {
            return Err(ValidationError::FutureBlock {
                timestamp: block.timestamp,
                clock: ctx.local_clock,
                drift: params.max_future_drift,
            });
        }

        // (g)
        if block.timestamp < parent.timestamp {
            return Err(ValidationError::StructuralError(format!(
                "timestamp {} before parent timestamp {}",
                block.timestamp, parent.timestamp
            )));
        }
        if block.height != parent.height + 1 {
            return Err(ValidationError::StructuralError(format!(
                "height {} does not follow parent height {}",
                block.height, parent.height
            )));
        }
        Ok(())
    }

    /// Validates, then stores. Already-stored blocks are a no-op.
    pub fn insert(
        &self,
        store: &mut ChainStore,
        block: Block,
        ctx: &ValidationContext<'_>,
    ) -> Result<InsertOutcome, ValidationError> {
        let id = block
            .id_with(self.hasher.as_ref())
            .map_err(|e| ValidationError::StructuralError(e.to_string()))?;
        if store.contains(&id) {
            return Ok(InsertOutcome {
                accepted: false,
                reorg: false,
                canonical_tip: store.canonical_tip(),
            });
        }
        self.validate(&block, store, ctx)?;
        Ok(store.insert_with_id(id, block)?)
    }
}

pub fn validate_block(
    block: &Block,
    store: &ChainStore,
    ledger: &StakeLedger,
    local_clock: f64,
    params: &ProtocolParams,
) -> Result<(), ValidationError> {
    let ctx = ValidationContext {
        ledger,
        local_clock,
        params,
    };
    Validator::default().validate(block, store, &ctx)
}

pub fn insert_block(
    store: &mut ChainStore,
    block: Block,
    ledger: &StakeLedger,
    local_clock: f64,
    params: &ProtocolParams,
) -> Result<InsertOutcome, ValidationError> {
    let ctx = ValidationContext {
        ledger,
        local_clock,
        params,
    };
    Validator::default().insert(store, block, &ctx)
}

//! Interleaved proof-of-work / proof-of-stake chain rules.
//!
//! Blocks alternate between work and stake kinds. Work blocks solve a hash
//! puzzle; stake blocks become valid after a wait time derived from a
//! chained seed and the producer's locked stake. Each kind has its own
//! difficulty controller, and the canonical chain is the one with the
//! largest combined work + stake difficulty.

pub mod block;
pub mod difficulty;
pub mod dump;
pub mod hash;
pub mod ledger;
pub mod params;
pub mod pos;
pub mod pow;
pub mod store;
pub mod validate;

pub use block::{block_id, Block, BlockError, BlockId, BlockKind, Proof, Seed, NONCE_LEN};
pub use difficulty::{adjust, boundary, next_difficulty, DifficultyState};
pub use ledger::{Amount, LedgerError, StakeLedger};
pub use params::{ParamError, PowMode, ProtocolParams};
pub use pos::{
    best_staker_draw, earliest_timestamp, next_seed, verify_seed, wait_time, PosError, SeedSigner,
    StakeDraw, StakerSpec,
};
pub use pow::{pow_target, sample_mining_time, verify_pow};
pub use store::{ChainStore, InsertOutcome, StoreError, TotalDifficulty};
pub use validate::{insert_block, validate_block, ValidationContext, ValidationError, Validator};

//! Simulation harness for the interleaved PoW/PoS chain.
//!
//! [`engine`] runs one network; [`experiments`] builds the fairness,
//! convergence, double-spend, stake-grinding and collusion studies on top
//! of it. All randomness comes from a scenario's `rng_seed`: trial `i`
//! uses ChaCha8 seeded with `rng_seed` on stream `i`.

pub mod config;
pub mod engine;
pub mod experiments;
pub mod stats;

use interleave_core::{
    BlockError, BlockKind, LedgerError, ParamError, PosError, StoreError, ValidationError,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

pub use config::{ActorSpec, Behavior, ScenarioConfig, ScenarioParams, ScenarioType};
pub use engine::{BlockRecord, Engine, EngineOptions, Limit};
pub use experiments::{
    expected_double_spend_win, run_collusion_headstart, run_convergence, run_double_spend,
    run_fairness, run_stake_grinding, run_steady_state, simulate, stake_grinding_success, SimRun,
};

/// Where and why a chain stopped growing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StallReport {
    pub height: u64,
    /// Simulated time of the last block.
    pub time: f64,
    pub waiting_for: BlockKind,
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid scenario: {0}")]
    Config(String),
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error(transparent)]
    Pos(#[from] PosError),
    #[error(transparent)]
    Block(#[from] BlockError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error("simulated block at height {height} failed validation: {error}")]
    Validation { height: u64, error: ValidationError },
    #[error("stall detected at height {} (t = {}s): no {} producer", .0.height, .0.time, .0.waiting_for)]
    Stall(StallReport),
    #[error("need at least {need} samples, got {got}")]
    TooFewSamples { got: usize, need: usize },
}

/// Generator for trial `trial` of a scenario seeded with `seed`.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

//! Event loop for one simulated network.
//!
//! Heights alternate kinds, so each height is a single race: after a stake
//! block every miner draws an exponential solve time; after a work block
//! every staker computes its seed-determined wait. The earliest producer
//! wins. Each kind carries its own difficulty controller, fed with the
//! winning block's time since its parent, exactly as validation recomputes it.

use interleave_core::validate::Validator;
use interleave_core::{
    earliest_timestamp, sample_mining_time, Block, BlockId, BlockKind, ChainStore, DifficultyState,
    PosError, Proof, ProtocolParams, Seed, StakeLedger, StakerSpec, TotalDifficulty,
    ValidationContext,
};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::ActorSpec;
use crate::{SimError, StallReport};

/// One produced block, without the proof bytes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BlockRecord {
    pub height: u64,
    pub kind: BlockKind,
    pub timestamp: f64,
    /// Seconds since the parent block.
    pub delta: f64,
    pub difficulty: f64,
    /// Index into the engine's actor list.
    pub producer: usize,
}

#[derive(Debug, Clone)]
pub struct EngineOptions {
    /// Keep a full [`ChainStore`] of the produced chain.
    pub record_chain: bool,
    /// Validate every n-th block against the recorded chain; 0 disables.
    pub validate_every: u64,
    pub stall_timeout: f64,
    /// Colluding actor index and the fraction of its stake-block wait it leaks early.
    pub collusion: Option<(usize, f64)>,
    /// Starting difficulties; the genesis values when `None`.
    pub initial_difficulty: Option<(f64, f64)>,
}

impl Default for EngineOptions {
    fn default() -> Self {
        EngineOptions {
            record_chain: true,
            validate_every: 100,
            stall_timeout: crate::config::SECONDS_PER_DAY,
            collusion: None,
            initial_difficulty: None,
        }
    }
}

/// When to stop a run. A block is only produced if it fits both limits.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Limit {
    pub blocks: Option<u64>,
    /// Simulated seconds since genesis.
    pub time: Option<f64>,
}

struct Recorder {
    store: ChainStore,
    ledger: StakeLedger,
    validator: Validator,
    tip: BlockId,
}

pub struct Engine {
    params: ProtocolParams,
    actors: Vec<ActorSpec>,
    stakers: Vec<StakerSpec>,
    /// `stakers[i]` belongs to `actors[staker_actor[i]]`.
    staker_actor: Vec<usize>,
    options: EngineOptions,
    rng: ChaCha8Rng,
    d_w: DifficultyState,
    d_s: DifficultyState,
    height: u64,
    tip_kind: BlockKind,
    tip_time: f64,
    tip_producer: Option<usize>,
    /// Wait time of the tip when it is a stake block.
    tip_wait: f64,
    prev_seed: Seed,
    td: TotalDifficulty,
    records: Vec<BlockRecord>,
    recorder: Option<Recorder>,
}

impl Engine {
    pub fn new(
        params: ProtocolParams,
        actors: Vec<ActorSpec>,
        options: EngineOptions,
        rng: ChaCha8Rng,
    ) -> Result<Self, SimError> {
        params.validate()?;
        let mut stakers = Vec::new();
        let mut staker_actor = Vec::new();
        let mut ledger = StakeLedger::new(params.unlock_delay);
        for (i, a) in actors.iter().enumerate() {
            if a.stake > 0 {
                stakers.push(StakerSpec::new(a.id.clone(), a.stake));
                staker_actor.push(i);
                ledger.credit(&a.id, a.stake);
                ledger.lock(&a.id, a.stake, 0).expect("credited above");
            }
        }
        let genesis = params.genesis_block();
        let recorder = if options.record_chain {
            let store = ChainStore::new(genesis.clone())?;
            let tip = store.genesis_id();
            Some(Recorder {
                store,
                ledger,
                validator: Validator::default(),
                tip,
            })
        } else {
            None
        };
        let (d_w, d_s) = options
            .initial_difficulty
            .unwrap_or((params.genesis_d_w, params.genesis_d_s));
        Ok(Engine {
            d_w: DifficultyState::new(d_w, &params),
            d_s: DifficultyState::new(d_s, &params),
            height: 0,
            tip_kind: BlockKind::Work,
            tip_time: genesis.timestamp,
            tip_producer: None,
            tip_wait: 0.0,
            prev_seed: params.genesis_seed_0,
            td: TotalDifficulty::default().extended(BlockKind::Work, genesis.difficulty),
            records: Vec::new(),
            recorder,
            params,
            actors,
            stakers,
            staker_actor,
            options,
            rng,
        })
    }

    pub fn params(&self) -> &ProtocolParams {
        &self.params
    }

    pub fn actors(&self) -> &[ActorSpec] {
        &self.actors
    }

    pub fn records(&self) -> &[BlockRecord] {
        &self.records
    }

    pub fn height(&self) -> u64 {
        self.height
    }

    pub fn tip_time(&self) -> f64 {
        self.tip_time
    }

    pub fn total_difficulty(&self) -> TotalDifficulty {
        self.td
    }

    pub fn difficulties(&self) -> (f64, f64) {
        (self.d_w.d, self.d_s.d)
    }

    pub fn store(&self) -> Option<&ChainStore> {
        self.recorder.as_ref().map(|r| &r.store)
    }

    pub fn ledger(&self) -> Option<&StakeLedger> {
        self.recorder.as_ref().map(|r| &r.ledger)
    }

    pub fn into_parts(self) -> (Vec<BlockRecord>, Option<(ChainStore, StakeLedger)>) {
        (self.records, self.recorder.map(|r| (r.store, r.ledger)))
    }

    fn stall(&self) -> SimError {
        SimError::Stall(StallReport {
            height: self.height,
            time: self.tip_time,
            waiting_for: self.tip_kind.opposite(),
        })
    }

    /// Earliest miner: (actor, timestamp).
    fn work_race(&mut self) -> Result<Option<(usize, f64)>, SimError> {
        let d = self.d_w.d;
        let leak = match (self.options.collusion, self.tip_producer) {
            (Some((c, f)), Some(p)) if c == p && self.tip_kind == BlockKind::Stake => Some((c, f)),
            _ => None,
        };
        let mut best: Option<(usize, f64)> = None;
        for (i, a) in self.actors.iter().enumerate() {
            if a.hash_rate <= 0.0 {
                continue;
            }
            let t = sample_mining_time(a.hash_rate, d, &mut self.rng)?;
            let ts = match leak {
                // Mining started before the stake block was valid, but the
                // work block cannot predate its parent.
                Some((c, f)) if c == i => {
                    (self.tip_time - f * self.tip_wait + t).max(self.tip_time)
                }
                _ => self.tip_time + t,
            };
            let better = match best {
                None => true,
                Some((_, b)) => ts < b || (ts == b && leak.is_some_and(|(c, _)| c == i)),
            };
            if better {
                best = Some((i, ts));
            }
        }
        Ok(best)
    }

    /// Produces the next block unless it would break `limit`.
    /// Returns `Ok(false)` when the limit stopped the run.
    pub fn step(&mut self, limit: &Limit) -> Result<bool, SimError> {
        if limit.blocks.is_some_and(|n| self.height >= n) {
            return Ok(false);
        }
        let kind = self.tip_kind.opposite();
        let (producer, timestamp, proof, wait) = match kind {
            BlockKind::Work => {
                let Some((i, ts)) = self.work_race()? else {
                    return Err(self.stall());
                };
                let mut nonce = vec![0u8; 32];
                nonce[24..].copy_from_slice(&(self.height + 1).to_be_bytes());
                (i, ts, Proof::Work { nonce }, 0.0)
            }
            BlockKind::Stake => {
                let draw = match interleave_core::best_staker_draw(
                    &self.stakers,
                    &self.prev_seed,
                    self.d_s.d,
                ) {
                    Ok(d) => d,
                    Err(PosError::NoStakers) => return Err(self.stall()),
                    Err(e) => return Err(e.into()),
                };
                let ts = earliest_timestamp(self.tip_time, draw.delta)?;
                (
                    self.staker_actor[draw.winner],
                    ts,
                    Proof::Stake { seed: draw.seed },
                    draw.delta,
                )
            }
        };
        if timestamp - self.tip_time > self.options.stall_timeout {
            return Err(self.stall());
        }
        if limit.time.is_some_and(|t| timestamp > t) {
            return Ok(false);
        }

        let delta = timestamp - self.tip_time;
        let state = match kind {
            BlockKind::Work => &mut self.d_w,
            BlockKind::Stake => &mut self.d_s,
        };
        let difficulty = state.d;
        state.observe(delta)?;

        let height = self.height + 1;
        if let Some(rec) = &mut self.recorder {
            let block = Block {
                parent_id: rec.tip,
                height,
                timestamp,
                difficulty,
                producer_id: self.actors[producer].id.clone(),
                proof: proof.clone(),
            };
            let every = self.options.validate_every;
            let tip = if every > 0 && height.is_multiple_of(every) {
                let ctx = ValidationContext {
                    ledger: &rec.ledger,
                    local_clock: timestamp,
                    params: &self.params,
                };
                let id = block.id()?;
                rec.validator
                    .insert(&mut rec.store, block, &ctx)
                    .map_err(|error| SimError::Validation { height, error })?;
                id
            } else {
                let id = block.id()?;
                rec.store.insert_unchecked(block)?;
                id
            };
            rec.tip = tip;
        }
        if let Proof::Stake { seed } = proof {
            self.prev_seed = seed;
        }
        self.td = self.td.extended(kind, difficulty);
        self.height = height;
        self.tip_kind = kind;
        self.tip_time = timestamp;
        self.tip_producer = Some(producer);
        self.tip_wait = wait;
        self.records.push(BlockRecord {
            height,
            kind,
            timestamp,
            delta,
            difficulty,
            producer,
        });
        Ok(true)
    }

    pub fn run(&mut self, limit: &Limit) -> Result<(), SimError> {
        if limit.blocks.is_none() && limit.time.is_none() {
            return Err(SimError::Config("a run needs a block or time limit".into()));
        }
        while self.step(limit)? {}
        Ok(())
    }
}

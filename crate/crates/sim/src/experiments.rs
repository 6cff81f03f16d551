//! Experiments built on the engine.

use interleave_core::{
    best_staker_draw, BlockKind, ChainStore, ProtocolParams, Seed, StakeLedger, StakerSpec,
    TotalDifficulty,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ActorSpec, Behavior, ScenarioConfig, ScenarioType};
use crate::engine::{BlockRecord, Engine, EngineOptions, Limit};
use crate::stats::{binomial_stderr, block_time_report, moments, BlockTimeReport};
use crate::{trial_rng, SimError, StallReport};

/// A single simulated network run.
pub struct SimRun {
    pub params: ProtocolParams,
    pub actors: Vec<ActorSpec>,
    pub records: Vec<BlockRecord>,
    pub chain: Option<(ChainStore, StakeLedger)>,
    pub stall: Option<StallReport>,
    pub total_difficulty: TotalDifficulty,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ActorShare {
    pub id: String,
    pub work_blocks: u64,
    pub stake_blocks: u64,
    /// Share of all blocks.
    pub total: f64,
    pub work: f64,
    pub stake: f64,
    /// `v/(2 sum v) + h/(2 sum h)`.
    pub expected_total: f64,
}

impl SimRun {
    pub fn blocks(&self) -> u64 {
        self.records.len() as u64
    }

    pub fn blocks_of(&self, kind: BlockKind) -> u64 {
        self.records.iter().filter(|r| r.kind == kind).count() as u64
    }

    pub fn end_time(&self) -> f64 {
        self.records.last().map_or(0.0, |r| r.timestamp)
    }

    pub fn of_kind(&self, kind: BlockKind) -> impl Iterator<Item = &BlockRecord> {
        self.records.iter().filter(move |r| r.kind == kind)
    }

    pub fn deltas(&self, kind: BlockKind) -> Vec<f64> {
        self.of_kind(kind).map(|r| r.delta).collect()
    }

    /// Difficulty weighted by how long each block of `kind` took.
    pub fn time_average_difficulty(&self, kind: BlockKind) -> f64 {
        let (num, den) = self.of_kind(kind).fold((0.0, 0.0), |(n, d), r| {
            (n + r.difficulty * r.delta, d + r.delta)
        });
        num / den
    }

    pub fn shares(&self) -> Vec<ActorShare> {
        let n = self.actors.len();
        let (mut work, mut stake) = (vec![0u64; n], vec![0u64; n]);
        for r in &self.records {
            match r.kind {
                BlockKind::Work => work[r.producer] += 1,
                BlockKind::Stake => stake[r.producer] += 1,
            }
        }
        let total_work: u64 = work.iter().sum();
        let total_stake: u64 = stake.iter().sum();
        let sum_h: f64 = self.actors.iter().map(|a| a.hash_rate).sum();
        let sum_v: u64 = self.actors.iter().map(|a| a.stake).sum();
        let ratio = |a: u64, b: u64| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        self.actors
            .iter()
            .enumerate()
            .map(|(i, a)| {
                let h_part = if sum_h > 0.0 {
                    a.hash_rate / sum_h
                } else {
                    0.0
                };
                ActorShare {
                    id: a.id.clone(),
                    work_blocks: work[i],
                    stake_blocks: stake[i],
                    total: ratio(work[i] + stake[i], total_work + total_stake),
                    work: ratio(work[i], total_work),
                    stake: ratio(stake[i], total_stake),
                    expected_total: 0.5 * ratio(a.stake, sum_v) + 0.5 * h_part,
                }
            })
            .collect()
    }
}

fn engine_options(cfg: &ScenarioConfig) -> EngineOptions {
    EngineOptions {
        record_chain: true,
        validate_every: cfg.validate_every,
        stall_timeout: cfg.stall_timeout,
        collusion: None,
        initial_difficulty: None,
    }
}

fn limit(cfg: &ScenarioConfig) -> Limit {
    Limit {
        blocks: cfg.duration_blocks,
        time: cfg.duration_seconds(),
    }
}

/// Runs the scenario's actors as one network. A stall is recorded, not raised.
pub fn simulate(cfg: &ScenarioConfig) -> Result<SimRun, SimError> {
    let params = cfg.protocol_params()?;
    let mut options = engine_options(cfg);
    if cfg.kind == ScenarioType::Collusion {
        options.collusion = cfg.colluder();
    }
    let mut engine = Engine::new(
        params.clone(),
        cfg.actors.clone(),
        options,
        trial_rng(cfg.rng_seed, 0),
    )?;
    let stall = match engine.run(&limit(cfg)) {
        Ok(()) => None,
        Err(SimError::Stall(s)) => Some(s),
        Err(e) => return Err(e),
    };
    let total_difficulty = engine.total_difficulty();
    let (records, chain) = engine.into_parts();
    Ok(SimRun {
        params,
        actors: cfg.actors.clone(),
        records,
        chain,
        stall,
        total_difficulty,
    })
}

fn no_stall(run: SimRun) -> Result<SimRun, SimError> {
    match run.stall {
        Some(s) => Err(SimError::Stall(s)),
        None => Ok(run),
    }
}

pub fn run_steady_state(cfg: &ScenarioConfig) -> Result<SimRun, SimError> {
    no_stall(simulate(cfg)?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SteadyStateReport {
    pub blocks: u64,
    pub work_blocks: u64,
    pub stake_blocks: u64,
    pub end_time: f64,
    pub td_work: f64,
    pub td_stake: f64,
    pub final_d_w: f64,
    pub final_d_s: f64,
    pub block_time_work: Option<BlockTimeReport>,
    pub block_time_stake: Option<BlockTimeReport>,
    pub stall: Option<StallReport>,
}

/// Summary of a run; block-time fits are `None` below the sample threshold.
pub fn steady_state_report(run: &SimRun, bins: usize, bin_width: f64) -> SteadyStateReport {
    let rate = run.params.lambda;
    let fit = |kind| block_time_report(&run.deltas(kind), bins, bin_width, rate).ok();
    let last = |kind| run.of_kind(kind).last().map(|r| r.difficulty);
    SteadyStateReport {
        blocks: run.blocks(),
        work_blocks: run.blocks_of(BlockKind::Work),
        stake_blocks: run.blocks_of(BlockKind::Stake),
        end_time: run.end_time(),
        td_work: run.total_difficulty.work,
        td_stake: run.total_difficulty.stake,
        final_d_w: last(BlockKind::Work).unwrap_or(run.params.genesis_d_w),
        final_d_s: last(BlockKind::Stake).unwrap_or(run.params.genesis_d_s),
        block_time_work: fit(BlockKind::Work),
        block_time_stake: fit(BlockKind::Stake),
        stall: run.stall,
    }
}

/// Histogram and exponential fit of one kind's inter-block times.
pub fn block_time_histogram(
    run: &SimRun,
    kind: BlockKind,
    bins: usize,
    width: f64,
) -> Result<BlockTimeReport, SimError> {
    block_time_report(&run.deltas(kind), bins, width, run.params.lambda)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FairnessReport {
    pub blocks: u64,
    pub actors: Vec<ActorShare>,
}

pub fn run_fairness(cfg: &ScenarioConfig) -> Result<(FairnessReport, SimRun), SimError> {
    if cfg.actors.len() < 2 {
        return Err(SimError::Config(
            "fairness needs at least two actors".into(),
        ));
    }
    let run = run_steady_state(cfg)?;
    let report = FairnessReport {
        blocks: run.blocks(),
        actors: run.shares(),
    };
    Ok((report, run))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KindConvergence {
    /// `H T` for work, `V T` for stake.
    pub target: f64,
    pub initial: f64,
    pub time_average: f64,
    /// `time_average / target - 1`.
    pub time_average_error: f64,
    /// Height of the first block of this kind within 10% of the target.
    pub converged_at_height: Option<u64>,
    /// Relative spread of `d / target` from convergence on.
    pub relative_std_after: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub blocks: u64,
    pub work: KindConvergence,
    pub stake: KindConvergence,
}

pub const CONVERGENCE_BAND: f64 = 0.1;

fn kind_convergence(run: &SimRun, kind: BlockKind, target: f64, initial: f64) -> KindConvergence {
    let time_average = run.time_average_difficulty(kind);
    let first = run
        .of_kind(kind)
        .position(|r| (r.difficulty / target - 1.0).abs() <= CONVERGENCE_BAND);
    let converged_at_height = first
        .and_then(|i| run.of_kind(kind).nth(i))
        .map(|r| r.height);
    let relative_std_after = first.map(|i| {
        let rel: Vec<f64> = run
            .of_kind(kind)
            .skip(i)
            .map(|r| r.difficulty / target)
            .collect();
        moments(&rel).std
    });
    KindConvergence {
        target,
        initial,
        time_average,
        time_average_error: time_average / target - 1.0,
        converged_at_height,
        relative_std_after,
    }
}

pub fn run_convergence(cfg: &ScenarioConfig) -> Result<(ConvergenceReport, SimRun), SimError> {
    let run = run_steady_state(cfg)?;
    let t = run.params.target_block_time;
    let h: f64 = run.actors.iter().map(|a| a.hash_rate).sum();
    let v: u64 = run.actors.iter().map(|a| a.stake).sum();
    let report = ConvergenceReport {
        blocks: run.blocks(),
        work: kind_convergence(&run, BlockKind::Work, h * t, run.params.genesis_d_w),
        stake: kind_convergence(&run, BlockKind::Stake, v as f64 * t, run.params.genesis_d_s),
    };
    Ok((report, run))
}

/// The attacker's side chain is expected to outgrow the honest one iff
/// `k d_w + l d_s > d_w + d_s`.
pub fn expected_double_spend_win(k: f64, l: f64, d_w: f64, d_s: f64) -> bool {
    k * d_w + l * d_s > d_w + d_s
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialOutcome {
    pub trial: u64,
    /// Time at which the honest chain reached the horizon.
    pub end_time: f64,
    pub honest_blocks: u64,
    pub attacker_blocks: u64,
    /// Total difficulty added after the fork point.
    pub honest_td: f64,
    pub attacker_td: f64,
    pub attacker_wins: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DoubleSpendReport {
    pub k: f64,
    pub l: f64,
    pub horizon: u64,
    pub trials: u64,
    pub wins: u64,
    pub win_rate: f64,
    pub stderr: f64,
    /// The analytic condition at the fork-point difficulties.
    pub expected_win: bool,
    pub mean_margin: f64,
    pub outcomes: Vec<TrialOutcome>,
}

fn double_spend_trial(
    cfg: &ScenarioConfig,
    base: &ProtocolParams,
    honest: &[ActorSpec],
    attacker: &ActorSpec,
    trial: u64,
) -> Result<TrialOutcome, SimError> {
    let mut rng = trial_rng(cfg.rng_seed, trial);
    let mut fork_seed = [0u8; 32];
    rng.fill(&mut fork_seed);
    let params = ProtocolParams {
        genesis_seed_0: Seed(fork_seed),
        ..base.clone()
    };
    let options = |initial| EngineOptions {
        record_chain: cfg.validate_every > 0,
        validate_every: cfg.validate_every,
        stall_timeout: cfg.stall_timeout,
        collusion: None,
        initial_difficulty: initial,
    };
    let honest_rng = ChaCha8Rng::seed_from_u64(rng.random());
    let attacker_rng = ChaCha8Rng::seed_from_u64(rng.random());

    let mut h = Engine::new(params.clone(), honest.to_vec(), options(None), honest_rng)?;
    h.run(&Limit {
        blocks: cfg.horizon,
        time: None,
    })?;
    let end_time = h.tip_time();

    let k = cfg.k.unwrap_or(0.0);
    let l = cfg.l.unwrap_or(0.0);
    let initial = cfg.analytic_difficulty.then(|| {
        (
            base.genesis_d_w * k.max(1e-300),
            base.genesis_d_s * l.max(1e-300),
        )
    });
    let mut a = Engine::new(
        params,
        vec![attacker.clone()],
        options(initial),
        attacker_rng,
    )?;
    let attacker_limit = Limit {
        blocks: None,
        time: Some(end_time),
    };
    match a.run(&attacker_limit) {
        Ok(()) | Err(SimError::Stall(_)) => {}
        Err(e) => return Err(e),
    }

    let genesis = base.genesis_d_w;
    let honest_td = h.total_difficulty().sum() - genesis;
    let attacker_td = a.total_difficulty().sum() - genesis;
    Ok(TrialOutcome {
        trial,
        end_time,
        honest_blocks: h.height(),
        attacker_blocks: a.height(),
        honest_td,
        attacker_td,
        attacker_wins: attacker_td > honest_td,
    })
}

/// Trials run in parallel; outcomes are ordered by trial index.
pub fn run_double_spend(cfg: &ScenarioConfig) -> Result<DoubleSpendReport, SimError> {
    let k = cfg
        .k
        .ok_or_else(|| SimError::Config("double_spend needs `k`".into()))?;
    let l = cfg
        .l
        .ok_or_else(|| SimError::Config("double_spend needs `l`".into()))?;
    let horizon = cfg.horizon.unwrap_or(0);
    if horizon == 0 {
        return Err(SimError::Config("double_spend needs horizon >= 1".into()));
    }
    let base = cfg.protocol_params()?;
    let honest: Vec<ActorSpec> = cfg
        .actors
        .iter()
        .filter(|a| a.behavior != Behavior::DoubleSpender)
        .cloned()
        .collect();
    let (sum_h, sum_v) = cfg.honest_totals();
    let attacker_id = cfg
        .actors
        .iter()
        .find(|a| a.behavior == Behavior::DoubleSpender)
        .map_or_else(|| "attacker".to_string(), |a| a.id.clone());
    let attacker = ActorSpec::new(attacker_id, k * sum_h, (l * sum_v as f64).round() as u64)
        .with_behavior(Behavior::DoubleSpender);
    let expected_win = expected_double_spend_win(k, l, base.genesis_d_w, base.genesis_d_s);

    // Without both resources the attacker cannot extend an interleaved chain.
    let outcomes: Vec<TrialOutcome> = if attacker.hash_rate <= 0.0 || attacker.stake == 0 {
        Vec::new()
    } else {
        (0..cfg.trials)
            .into_par_iter()
            .map(|t| double_spend_trial(cfg, &base, &honest, &attacker, t))
            .collect::<Result<_, _>>()?
    };
    let wins = outcomes.iter().filter(|o| o.attacker_wins).count() as u64;
    let win_rate = wins as f64 / cfg.trials as f64;
    let mean_margin = if outcomes.is_empty() {
        0.0
    } else {
        outcomes
            .iter()
            .map(|o| o.attacker_td - o.honest_td)
            .sum::<f64>()
            / outcomes.len() as f64
    };
    Ok(DoubleSpendReport {
        k,
        l,
        horizon,
        trials: cfg.trials,
        wins,
        win_rate,
        stderr: binomial_stderr(win_rate, cfg.trials),
        expected_win,
        mean_margin,
        outcomes,
    })
}

/// Probability of winning `x` further blocks in a row with per-block odds `p`.
pub fn stake_grinding_success(p: f64, x: u32) -> Result<f64, SimError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(SimError::Config(format!("p must lie in [0, 1], got {p}")));
    }
    Ok(p.powi(x as i32))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrindingReport {
    pub grinder: String,
    /// Grinder's share of total stake.
    pub p: f64,
    pub x: u32,
    pub windows: u64,
    pub successes: u64,
    pub frequency: f64,
    pub expected: f64,
    pub stderr: f64,
    /// `(frequency - expected) / sigma` under the closed form.
    pub z_score: f64,
}

const GRINDING_CHUNK: u64 = 10_000;

/// Each window starts right after a stake block won by the grinder; it
/// succeeds when the grinder also wins the next `x` stake blocks, every
/// seed chaining from the previous winner's.
pub fn run_stake_grinding(cfg: &ScenarioConfig) -> Result<GrindingReport, SimError> {
    let x = cfg
        .x
        .ok_or_else(|| SimError::Config("stake_grinding needs `x`".into()))?;
    let windows = cfg.windows.unwrap_or(0);
    let params = cfg.protocol_params()?;
    let stakers: Vec<StakerSpec> = cfg
        .actors
        .iter()
        .filter(|a| a.stake > 0)
        .map(|a| StakerSpec::new(a.id.clone(), a.stake))
        .collect();
    let grinder = cfg
        .actors
        .iter()
        .find(|a| a.behavior == Behavior::StakeGrinder)
        .ok_or_else(|| SimError::Config("stake_grinding needs a stake_grinder actor".into()))?;
    let g = stakers
        .iter()
        .position(|s| s.id == grinder.id)
        .ok_or_else(|| SimError::Config("the stake grinder needs stake".into()))?;
    let total: u64 = stakers.iter().map(|s| s.stake).sum();
    let p = grinder.stake as f64 / total as f64;

    let chunks = windows.div_ceil(GRINDING_CHUNK);
    let successes: u64 = (0..chunks)
        .into_par_iter()
        .map(|c| -> Result<u64, SimError> {
            let mut rng = trial_rng(cfg.rng_seed, c);
            let n = GRINDING_CHUNK.min(windows - c * GRINDING_CHUNK);
            let mut wins = 0;
            for _ in 0..n {
                let mut seed = [0u8; 32];
                rng.fill(&mut seed);
                let mut prev = Seed(seed);
                let mut ok = true;
                for _ in 0..x {
                    let draw = best_staker_draw(&stakers, &prev, params.genesis_d_s)?;
                    if draw.winner != g {
                        ok = false;
                        break;
                    }
                    prev = draw.seed;
                }
                wins += u64::from(ok);
            }
            Ok(wins)
        })
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .sum();

    let expected = stake_grinding_success(p, x)?;
    let frequency = successes as f64 / windows as f64;
    let sigma = binomial_stderr(expected, windows);
    Ok(GrindingReport {
        grinder: grinder.id.clone(),
        p,
        x,
        windows,
        successes,
        frequency,
        expected,
        stderr: binomial_stderr(frequency, windows),
        z_score: if sigma > 0.0 {
            (frequency - expected) / sigma
        } else {
            0.0
        },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MinerExcess {
    pub id: String,
    pub work_share: f64,
    pub hash_share: f64,
    pub excess: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CollusionReport {
    pub colluder: String,
    pub leak_fraction: f64,
    pub work_blocks: u64,
    pub miner_excess_share: f64,
    /// Binomial standard error of the colluder's work share.
    pub stderr: f64,
    pub miners: Vec<MinerExcess>,
}

pub fn run_collusion_headstart(
    cfg: &ScenarioConfig,
) -> Result<(CollusionReport, SimRun), SimError> {
    let (c, leak_fraction) = cfg
        .colluder()
        .ok_or_else(|| SimError::Config("collusion needs a colluding_pair actor".into()))?;
    if !(0.0..=1.0).contains(&leak_fraction) {
        return Err(SimError::Config(format!(
            "leak_fraction must lie in [0, 1], got {leak_fraction}"
        )));
    }
    let mut cfg = cfg.clone();
    cfg.kind = ScenarioType::Collusion;
    let run = run_steady_state(&cfg)?;
    let work_blocks = run.blocks_of(BlockKind::Work);
    let sum_h: f64 = run.actors.iter().map(|a| a.hash_rate).sum();
    let shares = run.shares();
    let miners: Vec<MinerExcess> = run
        .actors
        .iter()
        .zip(&shares)
        .filter(|(a, _)| a.hash_rate > 0.0)
        .map(|(a, s)| MinerExcess {
            id: a.id.clone(),
            work_share: s.work,
            hash_share: a.hash_rate / sum_h,
            excess: s.work - a.hash_rate / sum_h,
        })
        .collect();
    let colluder = &run.actors[c];
    let fair = if sum_h > 0.0 {
        colluder.hash_rate / sum_h
    } else {
        0.0
    };
    let report = CollusionReport {
        colluder: colluder.id.clone(),
        leak_fraction,
        work_blocks,
        miner_excess_share: shares[c].work - fair,
        stderr: binomial_stderr(fair, work_blocks),
        miners,
    };
    Ok((report, run))
}

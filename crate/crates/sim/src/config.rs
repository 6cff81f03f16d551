//! Scenario files: protocol parameters, actors and experiment settings.

use std::collections::HashSet;

use interleave_core::hash::sha256;
use interleave_core::params::{
    DEFAULT_ALPHA, DEFAULT_GENESIS_DIFFICULTY, DEFAULT_TARGET_BLOCK_TIME, DEFAULT_UNLOCK_DELAY,
};
use interleave_core::{PowMode, ProtocolParams, Seed};
use serde::{Deserialize, Serialize};

use crate::SimError;

pub const SECONDS_PER_DAY: f64 = 86_400.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioType {
    SteadyState,
    Fairness,
    DoubleSpend,
    StakeGrinding,
    Collusion,
    Convergence,
}

impl ScenarioType {
    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioType::SteadyState => "steady_state",
            ScenarioType::Fairness => "fairness",
            ScenarioType::DoubleSpend => "double_spend",
            ScenarioType::StakeGrinding => "stake_grinding",
            ScenarioType::Collusion => "collusion",
            ScenarioType::Convergence => "convergence",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Behavior {
    #[default]
    Honest,
    DoubleSpender,
    StakeGrinder,
    /// Staker and miner run by one party; winning stake blocks reach the
    /// miner `leak_fraction` of their wait time early.
    ColludingPair {
        leak_fraction: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActorSpec {
    pub id: String,
    /// Hashes per second.
    #[serde(default)]
    pub hash_rate: f64,
    #[serde(default)]
    pub stake: u64,
    #[serde(default)]
    pub behavior: Behavior,
}

impl ActorSpec {
    pub fn new(id: impl Into<String>, hash_rate: f64, stake: u64) -> Self {
        ActorSpec {
            id: id.into(),
            hash_rate,
            stake,
            behavior: Behavior::Honest,
        }
    }

    pub fn with_behavior(mut self, behavior: Behavior) -> Self {
        self.behavior = behavior;
        self
    }
}

/// Protocol parameters as written in a scenario. `lambda` is always `1/T`;
/// genesis seeds derive from the scenario's `rng_seed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioParams {
    #[serde(rename = "T")]
    pub target_block_time: f64,
    pub alpha: f64,
    pub unlock_delay: u64,
    pub genesis_d_w: f64,
    pub genesis_d_s: f64,
    pub max_future_drift: f64,
}

impl Default for ScenarioParams {
    fn default() -> Self {
        ScenarioParams {
            target_block_time: DEFAULT_TARGET_BLOCK_TIME,
            alpha: DEFAULT_ALPHA,
            unlock_delay: DEFAULT_UNLOCK_DELAY,
            genesis_d_w: DEFAULT_GENESIS_DIFFICULTY,
            genesis_d_s: DEFAULT_GENESIS_DIFFICULTY,
            max_future_drift: 1.0,
        }
    }
}

impl ScenarioParams {
    pub fn to_protocol(&self, rng_seed: u64) -> Result<ProtocolParams, SimError> {
        let (genesis_seed_0, genesis_seed_1) = scenario_genesis_seeds(rng_seed);
        let params = ProtocolParams {
            target_block_time: self.target_block_time,
            lambda: 1.0 / self.target_block_time,
            alpha: self.alpha,
            unlock_delay: self.unlock_delay,
            genesis_d_w: self.genesis_d_w,
            genesis_d_s: self.genesis_d_s,
            genesis_seed_0,
            genesis_seed_1,
            max_future_drift: self.max_future_drift,
            pow_mode: PowMode::Sampled,
        };
        params.validate()?;
        Ok(params)
    }
}

pub fn scenario_genesis_seeds(rng_seed: u64) -> (Seed, Seed) {
    let derive = |tag: u8| {
        let mut msg = b"interleave/scenario-seed/".to_vec();
        msg.push(tag);
        msg.extend_from_slice(&rng_seed.to_be_bytes());
        Seed(sha256(&msg))
    };
    (derive(b'0'), derive(b'1'))
}

fn one() -> u64 {
    1
}

fn default_bins() -> usize {
    100
}

fn default_bin_width() -> f64 {
    1.0
}

fn default_stall_timeout() -> f64 {
    SECONDS_PER_DAY
}

fn default_validate_every() -> u64 {
    100
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(rename = "type")]
    pub kind: ScenarioType,
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub description: Option<String>,
    #[serde(default)]
    pub params: ScenarioParams,
    #[serde(default)]
    pub actors: Vec<ActorSpec>,
    #[serde(default)]
    pub duration_days: Option<f64>,
    #[serde(default)]
    pub duration_blocks: Option<u64>,
    #[serde(default = "one")]
    pub trials: u64,
    #[serde(default)]
    pub rng_seed: u64,
    /// Attacker hash-power multiple.
    #[serde(default)]
    pub k: Option<f64>,
    /// Attacker stake multiple.
    #[serde(default)]
    pub l: Option<f64>,
    /// Honest blocks after the fork point.
    #[serde(default)]
    pub horizon: Option<u64>,
    /// Overrides the colluding pair's own `leak_fraction`.
    #[serde(default)]
    pub leak_fraction: Option<f64>,
    /// Consecutive wins a stake grinder needs after its first block.
    #[serde(default)]
    pub x: Option<u32>,
    #[serde(default)]
    pub windows: Option<u64>,
    #[serde(default = "default_bins")]
    pub bins: usize,
    #[serde(default = "default_bin_width")]
    pub bin_width: f64,
    /// Start the attacker's chain at `(k d_w, l d_s)` instead of letting it converge.
    #[serde(default)]
    pub analytic_difficulty: bool,
    /// Simulated seconds without a block before declaring a stall.
    #[serde(default = "default_stall_timeout")]
    pub stall_timeout: f64,
    /// Fully validate every n-th block of simulated chains; 0 disables.
    #[serde(default = "default_validate_every")]
    pub validate_every: u64,
}

impl ScenarioConfig {
    /// Minimal configuration of the given type; everything else defaulted.
    pub fn new(kind: ScenarioType) -> Self {
        ScenarioConfig {
            kind,
            name: None,
            description: None,
            params: ScenarioParams::default(),
            actors: Vec::new(),
            duration_days: None,
            duration_blocks: None,
            trials: 1,
            rng_seed: 0,
            k: None,
            l: None,
            horizon: None,
            leak_fraction: None,
            x: None,
            windows: None,
            bins: default_bins(),
            bin_width: default_bin_width(),
            analytic_difficulty: false,
            stall_timeout: default_stall_timeout(),
            validate_every: default_validate_every(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, SimError> {
        let cfg: ScenarioConfig =
            serde_json::from_str(text).map_err(|e| SimError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn protocol_params(&self) -> Result<ProtocolParams, SimError> {
        self.params.to_protocol(self.rng_seed)
    }

    pub fn duration_seconds(&self) -> Option<f64> {
        self.duration_days.map(|d| d * SECONDS_PER_DAY)
    }

    /// The colluding pair's index and effective leak fraction.
    pub fn colluder(&self) -> Option<(usize, f64)> {
        self.actors
            .iter()
            .enumerate()
            .find_map(|(i, a)| match a.behavior {
                Behavior::ColludingPair { leak_fraction } => {
                    Some((i, self.leak_fraction.unwrap_or(leak_fraction)))
                }
                _ => None,
            })
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |msg: String| Err(SimError::Config(msg));
        self.protocol_params()?;
        let mut ids = HashSet::new();
        for a in &self.actors {
            if !ids.insert(a.id.as_str()) {
                return bad(format!("duplicate actor id `{}`", a.id));
            }
            if !(a.hash_rate.is_finite() && a.hash_rate >= 0.0) {
                return bad(format!(
                    "actor `{}`: hash_rate must be finite and >= 0",
                    a.id
                ));
            }
            if a.hash_rate == 0.0 && a.stake == 0 && a.behavior != Behavior::DoubleSpender {
                return bad(format!("actor `{}` has neither hash rate nor stake", a.id));
            }
            if let Behavior::ColludingPair { leak_fraction } = a.behavior {
                check_fraction("leak_fraction", leak_fraction)?;
            }
        }
        if let Some(f) = self.leak_fraction {
            check_fraction("leak_fraction", f)?;
        }
        if self.trials == 0 {
            return bad("trials must be >= 1".into());
        }
        if !(self.stall_timeout.is_finite() && self.stall_timeout > 0.0) {
            return bad("stall_timeout must be finite and > 0".into());
        }
        if self.bins == 0 || !(self.bin_width.is_finite() && self.bin_width > 0.0) {
            return bad("bins and bin_width must be positive".into());
        }
        match self.kind {
            ScenarioType::SteadyState
            | ScenarioType::Fairness
            | ScenarioType::Collusion
            | ScenarioType::Convergence => {
                self.check_duration()?;
                if self.kind == ScenarioType::Fairness && self.actors.len() < 2 {
                    return bad("fairness needs at least two actors".into());
                }
                if self.kind == ScenarioType::Collusion {
                    let n = self
                        .actors
                        .iter()
                        .filter(|a| matches!(a.behavior, Behavior::ColludingPair { .. }))
                        .count();
                    if n != 1 {
                        return bad(format!(
                            "collusion needs exactly one colluding_pair actor, got {n}"
                        ));
                    }
                }
            }
            ScenarioType::DoubleSpend => {
                for (name, v) in [("k", self.k), ("l", self.l)] {
                    match v {
                        Some(v) if v.is_finite() && v >= 0.0 => {}
                        Some(v) => return bad(format!("{name} must be finite and >= 0, got {v}")),
                        None => return bad(format!("double_spend needs `{name}`")),
                    }
                }
                if self.horizon.unwrap_or(0) == 0 {
                    return bad("double_spend needs horizon >= 1".into());
                }
                let (h, v) = self.honest_totals();
                if h <= 0.0 || v == 0 {
                    return bad("double_spend needs honest hash rate and stake".into());
                }
            }
            ScenarioType::StakeGrinding => {
                if self.x.is_none() {
                    return bad("stake_grinding needs `x`".into());
                }
                if self.windows.unwrap_or(0) == 0 {
                    return bad("stake_grinding needs windows >= 1".into());
                }
                let grinders = self
                    .actors
                    .iter()
                    .filter(|a| a.behavior == Behavior::StakeGrinder)
                    .count();
                if grinders != 1 {
                    return bad(format!(
                        "stake_grinding needs exactly one stake_grinder actor, got {grinders}"
                    ));
                }
            }
        }
        Ok(())
    }

    fn check_duration(&self) -> Result<(), SimError> {
        let days_ok = self.duration_days.is_some_and(|d| d.is_finite() && d > 0.0);
        let blocks_ok = self.duration_blocks.is_some_and(|b| b > 0);
        if self.duration_days.is_some() && !days_ok {
            return Err(SimError::Config(
                "duration_days must be finite and > 0".into(),
            ));
        }
        if self.duration_blocks == Some(0) {
            return Err(SimError::Config("duration_blocks must be > 0".into()));
        }
        if !(days_ok || blocks_ok) {
            return Err(SimError::Config(
                "one of duration_days or duration_blocks is required".into(),
            ));
        }
        Ok(())
    }

    /// Aggregate hash rate and stake of the non-attacking actors.
    pub fn honest_totals(&self) -> (f64, u64) {
        self.actors
            .iter()
            .filter(|a| a.behavior != Behavior::DoubleSpender)
            .fold((0.0, 0), |(h, v), a| (h + a.hash_rate, v + a.stake))
    }
}

fn check_fraction(name: &str, v: f64) -> Result<(), SimError> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(SimError::Config(format!(
            "{name} must lie in [0, 1], got {v}"
        )))
    }
}

//! Stake-block seeds, wait times and the staker race.
//!
//! Each stake block carries a seed derived from the seed of the previous
//! stake block (its grandparent) and the producer's identity. A staker's
//! wait time is `d_s * ln(2^256 / H(seed)) / V`, which over random seeds is
//! exponential with rate `V / d_s`.

use num_traits::ToPrimitive;
use thiserror::Error;

use crate::block::Seed;
use crate::hash::{digest_value, Hasher256, Sha256Hasher};
use crate::ledger::Amount;
use crate::params::ParamError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PosError {
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error("no staker with positive stake")]
    NoStakers,
}

/// Produces the seed a staker must put in its next stake block.
pub trait SeedSigner: Send + Sync {
    fn sign(&self, prev_seed: &Seed, staker: &str) -> Seed;

    fn verify(&self, seed: &Seed, prev_seed: &Seed, staker: &str) -> bool {
        self.sign(prev_seed, staker) == *seed
    }
}

/// `H("seed" || len(staker) || staker || prev_seed)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct HashSeedSigner<H = Sha256Hasher> {
    hasher: H,
}

impl<H: Hasher256> HashSeedSigner<H> {
    pub fn new(hasher: H) -> Self {
        HashSeedSigner { hasher }
    }
}

impl<H: Hasher256> SeedSigner for HashSeedSigner<H> {
    fn sign(&self, prev_seed: &Seed, staker: &str) -> Seed {
        let id = staker.as_bytes();
        let mut data = Vec::with_capacity(4 + 4 + id.len() + 32);
        data.extend_from_slice(b"seed");
        data.extend_from_slice(&(id.len() as u32).to_be_bytes());
        data.extend_from_slice(id);
        data.extend_from_slice(&prev_seed.0);
        Seed(self.hasher.hash(&data))
    }
}

pub fn next_seed(prev_seed: &Seed, staker: &str) -> Seed {
    HashSeedSigner::<Sha256Hasher>::default().sign(prev_seed, staker)
}

pub fn verify_seed(seed: &Seed, prev_seed: &Seed, staker: &str) -> bool {
    HashSeedSigner::<Sha256Hasher>::default().verify(seed, prev_seed, staker)
}

/// `ln(2^256 / h)` for a 256-bit hash value `h` read as big-endian bytes.
/// `h = 0` is treated as `h = 1`.
pub fn log_range_ratio(digest: &[u8; 32]) -> f64 {
    let value = digest_value(digest);
    let h = value.to_f64().unwrap_or(f64::MAX).max(1.0);
    // h * 2^-256 is exact in binary floating point.
    let u = h * 2f64.powi(-256);
    -u.ln()
}

/// The unit exponential variate a seed yields: `ln(2^256 / H(seed))`.
pub fn seed_draw(seed: &Seed) -> f64 {
    seed_draw_with(&Sha256Hasher, seed)
}

pub fn seed_draw_with(hasher: &dyn Hasher256, seed: &Seed) -> f64 {
    log_range_ratio(&hasher.hash(&seed.0))
}

/// `d_s * draw / V`.
pub fn wait_time_from_draw(draw: f64, stake: f64, d_s: f64) -> Result<f64, ParamError> {
    if !(stake.is_finite() && stake > 0.0) {
        return Err(ParamError::new("V", "finite and > 0", stake));
    }
    if !(d_s.is_finite() && d_s > 0.0) {
        return Err(ParamError::new("d_s", "finite and > 0", d_s));
    }
    Ok(d_s * draw / stake)
}

pub fn wait_time(seed: &Seed, stake: f64, d_s: f64) -> Result<f64, ParamError> {
    wait_time_from_draw(seed_draw(seed), stake, d_s)
}

pub fn earliest_timestamp(parent_timestamp: f64, delta: f64) -> Result<f64, ParamError> {
    if delta.is_nan() || delta < 0.0 {
        return Err(ParamError::new("delta", ">= 0", delta));
    }
    Ok(parent_timestamp + delta)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StakerSpec {
    pub id: String,
    pub stake: Amount,
}

impl StakerSpec {
    pub fn new(id: impl Into<String>, stake: Amount) -> Self {
        StakerSpec {
            id: id.into(),
            stake,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StakeDraw {
    /// Index into the staker slice.
    pub winner: usize,
    pub seed: Seed,
    pub delta: f64,
}

/// Every staker with positive stake computes its wait time for the next
/// stake block; the smallest wins, ties going to the smaller seed.
pub fn best_staker_draw(
    stakers: &[StakerSpec],
    prev_seed: &Seed,
    d_s: f64,
) -> Result<StakeDraw, PosError> {
    best_staker_draw_with(
        &HashSeedSigner::<Sha256Hasher>::default(),
        &Sha256Hasher,
        stakers,
        prev_seed,
        d_s,
    )
}

pub fn best_staker_draw_with(
    signer: &dyn SeedSigner,
    hasher: &dyn Hasher256,
    stakers: &[StakerSpec],
    prev_seed: &Seed,
    d_s: f64,
) -> Result<StakeDraw, PosError> {
    let mut best: Option<StakeDraw> = None;
    for (i, s) in stakers.iter().enumerate() {
        if s.stake == 0 {
            continue;
        }
        let seed = signer.sign(prev_seed, &s.id);
        let delta = wait_time_from_draw(seed_draw_with(hasher, &seed), s.stake as f64, d_s)?;
        let better = match &best {
            None => true,
            Some(b) => delta < b.delta || (delta == b.delta && seed < b.seed),
        };
        if better {
            best = Some(StakeDraw {
                winner: i,
                seed,
                delta,
            });
        }
    }
    best.ok_or(PosError::NoStakers)
}

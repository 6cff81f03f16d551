//! Per-kind difficulty controller.
//!
//! Each block kind has its own difficulty, nudged by a factor of `1 + alpha`
//! after every block of that kind: up when the block arrived faster than
//! the median of `Exp(lambda)`, down when slower.

use crate::block::{BlockId, BlockKind};
use crate::params::{ParamError, ProtocolParams};
use crate::store::{ChainStore, StoreError};

/// Median of `Exp(lambda)`: `-ln(0.5) / lambda`.
pub fn boundary(lambda: f64) -> Result<f64, ParamError> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(ParamError::new("lambda", "finite and > 0", lambda));
    }
    Ok(-(0.5f64).ln() / lambda)
}

/// One controller step. Difficulty never drops below `min(d, 1)`.
pub fn adjust(d: f64, delta: f64, lambda: f64, alpha: f64) -> Result<f64, ParamError> {
    if !(d.is_finite() && d > 0.0) {
        return Err(ParamError::new("d", "finite and > 0", d));
    }
    if delta.is_nan() || delta < 0.0 {
        return Err(ParamError::new("delta", ">= 0", delta));
    }
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(ParamError::new("alpha", "finite and > 0", alpha));
    }
    let b = boundary(lambda)?;
    Ok(if delta > b {
        (d / (1.0 + alpha)).max(d.min(1.0))
    } else if delta < b {
        d * (1.0 + alpha)
    } else {
        d
    })
}

/// Difficulty of one block kind plus the controller constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DifficultyState {
    pub d: f64,
    pub lambda: f64,
    pub alpha: f64,
}

impl DifficultyState {
    pub fn new(d: f64, params: &ProtocolParams) -> Self {
        DifficultyState {
            d,
            lambda: params.lambda,
            alpha: params.alpha,
        }
    }

    /// Feeds the inter-arrival time of the block that used `self.d` and
    /// returns the difficulty for the next block of this kind.
    pub fn observe(&mut self, delta: f64) -> Result<f64, ParamError> {
        self.d = adjust(self.d, delta, self.lambda, self.alpha)?;
        Ok(self.d)
    }
}

fn genesis_difficulty(kind: BlockKind, params: &ProtocolParams) -> f64 {
    match kind {
        BlockKind::Work => params.genesis_d_w,
        BlockKind::Stake => params.genesis_d_s,
    }
}

/// Difficulty required of a `kind` block built on `parent`.
///
/// Uses the nearest ancestor of the same kind (inclusive of `parent`) and
/// that ancestor's own inter-arrival time. Genesis, or no such ancestor,
/// yields the genesis difficulty for the kind.
pub fn next_difficulty(
    store: &ChainStore,
    parent: &BlockId,
    kind: BlockKind,
    params: &ProtocolParams,
) -> Result<f64, StoreError> {
    store.block(parent)?;
    let Some((anchor_id, anchor)) = store.nearest_of_kind(parent, kind, true) else {
        return Ok(genesis_difficulty(kind, params));
    };
    if anchor_id == store.genesis_id() {
        return Ok(genesis_difficulty(kind, params));
    }
    let anchor_parent = store.block(&anchor.parent_id)?;
    let delta = (anchor.timestamp - anchor_parent.timestamp).max(0.0);
    Ok(adjust(
        anchor.difficulty,
        delta,
        params.lambda,
        params.alpha,
    )?)
}

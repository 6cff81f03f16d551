//! Block DAG with cumulative difficulty per block and heaviest-chain tip selection.

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap};

use thiserror::Error;

use crate::block::{Block, BlockError, BlockId, BlockKind};
use crate::params::ParamError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StoreError {
    #[error("unknown block {0}")]
    UnknownBlock(BlockId),
    #[error("parent {0} is not in the store")]
    UnknownParent(BlockId),
    #[error("height {got} does not follow parent height {parent}")]
    Height { parent: u64, got: u64 },
    #[error(transparent)]
    Block(#[from] BlockError),
    #[error(transparent)]
    Param(#[from] ParamError),
}

/// Cumulative work and stake difficulty from genesis to a block, inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TotalDifficulty {
    pub work: f64,
    pub stake: f64,
}

impl TotalDifficulty {
    pub fn sum(&self) -> f64 {
        self.work + self.stake
    }

    pub fn extended(self, kind: BlockKind, difficulty: f64) -> Self {
        match kind {
            BlockKind::Work => TotalDifficulty {
                work: self.work + difficulty,
                ..self
            },
            BlockKind::Stake => TotalDifficulty {
                stake: self.stake + difficulty,
                ..self
            },
        }
    }
}

/// Fork-choice order: larger `td_w + td_s`, then larger `td_w`, then smaller id.
/// `Greater` means `a` is preferred.
pub fn compare_tips(a: (&TotalDifficulty, &BlockId), b: (&TotalDifficulty, &BlockId)) -> Ordering {
    a.0.sum()
        .total_cmp(&b.0.sum())
        .then(a.0.work.total_cmp(&b.0.work))
        .then(b.1.cmp(a.1))
}

#[derive(Debug, Clone)]
struct Entry {
    block: Block,
    td: TotalDifficulty,
    children: Vec<BlockId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InsertOutcome {
    /// False when the block was already stored.
    pub accepted: bool,
    pub reorg: bool,
    pub canonical_tip: BlockId,
}

#[derive(Debug, Clone)]
pub struct ChainStore {
    entries: HashMap<BlockId, Entry>,
    tips: BTreeSet<BlockId>,
    genesis: BlockId,
    canonical: BlockId,
}

impl ChainStore {
    pub fn new(genesis: Block) -> Result<Self, StoreError> {
        let id = genesis.id()?;
        let td = TotalDifficulty::default().extended(genesis.kind(), genesis.difficulty);
        let mut entries = HashMap::new();
        entries.insert(
            id,
            Entry {
                block: genesis,
                td,
                children: Vec::new(),
            },
        );
        Ok(ChainStore {
            entries,
            tips: BTreeSet::from([id]),
            genesis: id,
            canonical: id,
        })
    }

    pub fn genesis_id(&self) -> BlockId {
        self.genesis
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, id: &BlockId) -> bool {
        self.entries.contains_key(id)
    }

    pub fn get(&self, id: &BlockId) -> Option<&Block> {
        self.entries.get(id).map(|e| &e.block)
    }

    pub fn block(&self, id: &BlockId) -> Result<&Block, StoreError> {
        self.get(id).ok_or(StoreError::UnknownBlock(*id))
    }

    pub fn children(&self, id: &BlockId) -> &[BlockId] {
        self.entries.get(id).map_or(&[], |e| &e.children)
    }

    pub fn tips(&self) -> impl Iterator<Item = &BlockId> {
        self.tips.iter()
    }

    pub fn canonical_tip(&self) -> BlockId {
        self.canonical
    }

    pub fn total_difficulty(&self, id: &BlockId) -> Result<TotalDifficulty, StoreError> {
        self.entries
            .get(id)
            .map(|e| e.td)
            .ok_or(StoreError::UnknownBlock(*id))
    }

    /// Walks from `id` back to genesis, starting with `id` itself.
    pub fn ancestors<'a>(
        &'a self,
        id: &BlockId,
    ) -> impl Iterator<Item = (BlockId, &'a Block)> + 'a {
        let mut cur = self.entries.get(id).map(|e| (*id, &e.block));
        let genesis = self.genesis;
        std::iter::from_fn(move || {
            let (id, block) = cur?;
            cur = if id == genesis {
                None
            } else {
                self.entries
                    .get(&block.parent_id)
                    .map(|e| (block.parent_id, &e.block))
            };
            Some((id, block))
        })
    }

    /// Nearest strict ancestor of `id` (or `id` itself when `inclusive`) of the given kind.
    pub fn nearest_of_kind(
        &self,
        id: &BlockId,
        kind: BlockKind,
        inclusive: bool,
    ) -> Option<(BlockId, &Block)> {
        self.ancestors(id)
            .skip(usize::from(!inclusive))
            .find(|(_, b)| b.kind() == kind)
    }

    /// Canonical chain from genesis to the canonical tip.
    pub fn canonical_chain(&self) -> Vec<(BlockId, &Block)> {
        let mut chain: Vec<_> = self.ancestors(&self.canonical).collect();
        chain.reverse();
        chain
    }

    /// Stores a block without consensus validation; only linkage, height and
    /// encoding are checked.
    pub fn insert_unchecked(&mut self, block: Block) -> Result<InsertOutcome, StoreError> {
        let id = block.id()?;
        self.insert_with_id(id, block)
    }

    pub(crate) fn insert_with_id(
        &mut self,
        id: BlockId,
        block: Block,
    ) -> Result<InsertOutcome, StoreError> {
        if self.entries.contains_key(&id) {
            return Ok(InsertOutcome {
                accepted: false,
                reorg: false,
                canonical_tip: self.canonical,
            });
        }
        let parent = self
            .entries
            .get_mut(&block.parent_id)
            .ok_or(StoreError::UnknownParent(block.parent_id))?;
        if block.height != parent.block.height + 1 {
            return Err(StoreError::Height {
                parent: parent.block.height,
                got: block.height,
            });
        }
        parent.children.push(id);
        let td = parent.td.extended(block.kind(), block.difficulty);
        let parent_id = block.parent_id;
        self.tips.remove(&parent_id);
        self.tips.insert(id);
        self.entries.insert(
            id,
            Entry {
                block,
                td,
                children: Vec::new(),
            },
        );

        let prev = self.canonical;
        let prev_td = self.entries[&prev].td;
        let mut reorg = false;
        if compare_tips((&td, &id), (&prev_td, &prev)) == Ordering::Greater {
            self.canonical = id;
            reorg = parent_id != prev && !self.is_ancestor(&prev, &id);
        }
        Ok(InsertOutcome {
            accepted: true,
            reorg,
            canonical_tip: self.canonical,
        })
    }

    /// True when `ancestor` lies on the path from `id` to genesis (inclusive).
    pub fn is_ancestor(&self, ancestor: &BlockId, id: &BlockId) -> bool {
        let Some(target_height) = self.get(ancestor).map(|b| b.height) else {
            return false;
        };
        self.ancestors(id)
            .take_while(|(_, b)| b.height >= target_height)
            .any(|(h, _)| h == *ancestor)
    }

    /// Recomputes the canonical tip from scratch over all tips.
    pub fn fork_choice(&self) -> BlockId {
        self.tips
            .iter()
            .map(|id| (id, &self.entries[id].td))
            .max_by(|a, b| compare_tips((a.1, a.0), (b.1, b.0)))
            .map(|(id, _)| *id)
            .expect("store always holds genesis")
    }
}

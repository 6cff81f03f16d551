//! Property suites: ledger conservation, total-difficulty bookkeeping,
//! fork-choice order independence, wait-time homogeneity and the controller.

use std::collections::HashMap;

use interleave_core::pow::hash_meets_target;
use interleave_core::{
    adjust, boundary, wait_time, Block, BlockId, BlockKind, ChainStore, Proof, Seed, StakeLedger,
};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
enum Op {
    Lock(usize, u64),
    Unlock(usize, u64),
    Release,
    Advance(u64),
}

fn op() -> impl Strategy<Value = Op> {
    prop_oneof![
        4 => (0..4usize, 0..400u64).prop_map(|(a, n)| Op::Lock(a, n)),
        3 => (0..4usize, 0..400u64).prop_map(|(a, n)| Op::Unlock(a, n)),
        1 => Just(Op::Release),
        2 => (0..20u64).prop_map(Op::Advance),
    ]
}

const ACCOUNTS: [&str; 4] = ["a", "b", "c", "d"];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn stake_is_conserved(
        ops in prop::collection::vec(op(), 10_000),
        delay in 0..50u64,
        grants in prop::array::uniform4(0..5_000u64),
    ) {
        let mut l = StakeLedger::new(delay);
        for (name, g) in ACCOUNTS.iter().zip(grants) {
            l.credit(name, g);
        }
        let mut height = 0u64;
        let mut max_locked = [0u64; 4];
        for op in ops {
            let before = l.clone();
            let result = match op {
                Op::Lock(a, n) => l.lock(ACCOUNTS[a], n, height).map(|_| ()),
                Op::Unlock(a, n) => l.unlock(ACCOUNTS[a], n, height).map(|_| ()),
                Op::Release => {
                    l.release_pending(height);
                    Ok(())
                }
                Op::Advance(n) => {
                    height += n;
                    Ok(())
                }
            };
            if result.is_err() {
                prop_assert_eq!(&l, &before);
            }
            let mut sum_locked = 0;
            for (i, (name, g)) in ACCOUNTS.iter().zip(grants).enumerate() {
                let holdings = l.account(name).map_or(0, |a| a.holdings());
                prop_assert_eq!(holdings, g);
                sum_locked += l.locked(name);
                max_locked[i] = max_locked[i].max(l.locked(name));
                for h in [height.saturating_sub(1), height, height + 1] {
                    prop_assert!(l.effective_stake(name, h) <= max_locked[i]);
                }
                // a query past every recorded event sees exactly the locked balance
                prop_assert_eq!(l.effective_stake(name, height + 1), l.locked(name));
            }
            prop_assert_eq!(l.total_locked(), sum_locked);
        }
    }
}

fn genesis(d: u32) -> Block {
    Block {
        parent_id: BlockId::ZERO,
        height: 0,
        timestamp: 0.0,
        difficulty: d as f64,
        producer_id: "genesis".into(),
        proof: Proof::Work { nonce: vec![0; 32] },
    }
}

fn child(parent_id: BlockId, parent: &Block, d: u32, tag: usize) -> Block {
    let kind = parent.kind().opposite();
    let mut bytes = [0u8; 32];
    bytes[..8].copy_from_slice(&(tag as u64).to_be_bytes());
    Block {
        parent_id,
        height: parent.height + 1,
        timestamp: parent.timestamp + 1.0,
        difficulty: d as f64,
        producer_id: format!("p{tag}"),
        proof: match kind {
            BlockKind::Work => Proof::Work {
                nonce: bytes.to_vec(),
            },
            BlockKind::Stake => Proof::Stake { seed: Seed(bytes) },
        },
    }
}

/// Random block tree with integer difficulties: block `i` hangs off a
/// uniformly chosen earlier block.
fn random_dag(rng: &mut ChaCha8Rng, n: usize) -> Vec<(BlockId, Block)> {
    let g = genesis(rng.random_range(1..=20));
    let mut blocks = vec![(g.id().unwrap(), g)];
    for tag in 1..n {
        let p = rng.random_range(0..blocks.len());
        let (pid, parent) = &blocks[p];
        let b = child(*pid, parent, rng.random_range(1..=20), tag);
        blocks.push((b.id().unwrap(), b));
    }
    blocks
}

/// Exhaustive oracle: walk every leaf to the root and score the path.
fn oracle_tip(blocks: &[(BlockId, Block)]) -> BlockId {
    let by_id: HashMap<BlockId, &Block> = blocks.iter().map(|(id, b)| (*id, b)).collect();
    let parents: std::collections::HashSet<BlockId> =
        blocks.iter().skip(1).map(|(_, b)| b.parent_id).collect();
    let mut best: Option<(u64, u64, BlockId)> = None;
    for (id, _) in blocks.iter().filter(|(id, _)| !parents.contains(id)) {
        let (mut w, mut s) = (0u64, 0u64);
        let mut cur = Some(*id);
        while let Some(c) = cur {
            let b = by_id[&c];
            match b.kind() {
                BlockKind::Work => w += b.difficulty as u64,
                BlockKind::Stake => s += b.difficulty as u64,
            }
            cur = (b.height > 0).then_some(b.parent_id);
        }
        let better = match best {
            None => true,
            Some((bs, bw, bid)) => (w + s, w) > (bs, bw) || ((w + s, w) == (bs, bw) && *id < bid),
        };
        if better {
            best = Some((w + s, w, *id));
        }
    }
    best.unwrap().2
}

/// Random topological order: shuffle, then repeatedly take the first block whose parent is in.
fn random_topological(rng: &mut ChaCha8Rng, blocks: &[(BlockId, Block)]) -> Vec<Block> {
    let mut pending: Vec<&(BlockId, Block)> = blocks[1..].iter().collect();
    pending.shuffle(rng);
    let mut present: std::collections::HashSet<BlockId> = [blocks[0].0].into();
    let mut order = Vec::with_capacity(pending.len());
    while !pending.is_empty() {
        let i = pending
            .iter()
            .position(|(_, b)| present.contains(&b.parent_id))
            .unwrap();
        let (id, b) = pending.remove(i);
        present.insert(*id);
        order.push(b.clone());
    }
    order
}

#[test]
fn fork_choice_matches_path_sum_oracle_in_any_order() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..1000 {
        let blocks = random_dag(&mut rng, 100);
        let expect = oracle_tip(&blocks);
        let mut tips = Vec::new();
        for _ in 0..2 {
            let mut store = ChainStore::new(blocks[0].1.clone()).unwrap();
            let mut last_sum = 0.0;
            for b in random_topological(&mut rng, &blocks) {
                store.insert_unchecked(b).unwrap();
                let td = store
                    .total_difficulty(&store.canonical_tip())
                    .unwrap()
                    .sum();
                assert!(td >= last_sum, "canonical total decreased");
                last_sum = td;
            }
            assert_eq!(store.fork_choice(), store.canonical_tip());
            tips.push(store.canonical_tip());
        }
        assert_eq!(tips[0], expect);
        assert_eq!(tips[1], expect);
    }
}

proptest! {
    #[test]
    fn incremental_totals_match_resummation(
        ds in prop::collection::vec(1e-3..1e9f64, 50),
    ) {
        let mut store = ChainStore::new(genesis(5)).unwrap();
        let mut tip = store.genesis_id();
        for (i, d) in ds.iter().enumerate() {
            let parent = store.block(&tip).unwrap().clone();
            let mut b = child(tip, &parent, 1, i + 1);
            b.difficulty = *d;
            let before = store.total_difficulty(&tip).unwrap();
            tip = b.id().unwrap();
            store.insert_unchecked(b.clone()).unwrap();
            let after = store.total_difficulty(&tip).unwrap();
            match b.kind() {
                BlockKind::Work => {
                    prop_assert_eq!(after.work, before.work + d);
                    prop_assert_eq!(after.stake, before.stake);
                }
                BlockKind::Stake => {
                    prop_assert_eq!(after.stake, before.stake + d);
                    prop_assert_eq!(after.work, before.work);
                }
            }
        }
        let (mut w, mut s) = (0.0, 0.0);
        for (_, b) in store.canonical_chain() {
            match b.kind() {
                BlockKind::Work => w += b.difficulty,
                BlockKind::Stake => s += b.difficulty,
            }
        }
        let td = store.total_difficulty(&tip).unwrap();
        prop_assert_eq!(td.work, w);
        prop_assert_eq!(td.stake, s);
    }

    #[test]
    fn wait_time_is_homogeneous(
        bytes in prop::array::uniform32(any::<u8>()),
        v in 1.0..1e9f64,
        d_s in 1.0..1e12f64,
        c in prop::sample::select(vec![2.0, 0.5, 3.0, 10.0, 1e3, 0.125]),
    ) {
        let seed = Seed(bytes);
        let base = wait_time(&seed, v, d_s).unwrap();
        let tol = 4.0 * f64::EPSILON * base;
        // scaling stake and difficulty together leaves the wait unchanged
        prop_assert!((wait_time(&seed, c * v, c * d_s).unwrap() - base).abs() <= tol);
        // scaling difficulty scales the wait
        prop_assert!((wait_time(&seed, v, c * d_s).unwrap() - c * base).abs() <= c * tol);
        // scaling stake divides it
        prop_assert!((wait_time(&seed, c * v, d_s).unwrap() - base / c).abs() <= tol / c);
    }

    #[test]
    fn controller_steps_by_alpha(
        d in 1.0..1e12f64,
        delta in 0.0..200.0f64,
        t in 1.0..60.0f64,
        alpha in 1e-3..0.5f64,
    ) {
        let lambda = 1.0 / t;
        let next = adjust(d, delta, lambda, alpha).unwrap();
        let b = boundary(lambda).unwrap();
        if delta < b {
            prop_assert_eq!(next, d * (1.0 + alpha));
        } else if delta > b {
            prop_assert_eq!(next, (d / (1.0 + alpha)).max(1.0));
        } else {
            prop_assert_eq!(next, d);
        }
        prop_assert_eq!(adjust(d, b, lambda, alpha).unwrap(), d);
        // faster arrivals never lower difficulty; harder starting points stay harder
        prop_assert!(adjust(d, delta * 0.5, lambda, alpha).unwrap() >= next);
        prop_assert!(adjust(d * 2.0, delta, lambda, alpha).unwrap() > next);
    }

    #[test]
    fn controller_never_drops_below_one_from_above(
        d in 1.0..1.5f64,
        alpha in 0.01..0.9f64,
    ) {
        prop_assert!(adjust(d, 1e6, 0.1, alpha).unwrap() >= 1.0);
    }

    #[test]
    fn solutions_stay_valid_at_lower_difficulty(
        digest in prop::array::uniform32(any::<u8>()),
        d in 1.0..1e6f64,
        f in 0.0..1.0f64,
    ) {
        let lower = 1.0 + (d - 1.0) * f;
        if hash_meets_target(&digest, d).unwrap() {
            prop_assert!(hash_meets_target(&digest, lower).unwrap());
        }
    }
}

proptest! {
    #[test]
    fn dump_round_trips_floats_exactly(
        ts in 0.0..1e9f64,
        d in 1.0..1e15f64,
        bytes in prop::array::uniform32(any::<u8>()),
    ) {
        use interleave_core::dump::{read_dump, write_dump};
        let g = genesis(7);
        let mut b = child(g.id().unwrap(), &g, 1, 1);
        b.timestamp = ts;
        b.difficulty = d;
        b.proof = Proof::Stake { seed: Seed(bytes) };
        let id = b.id().unwrap();
        let mut buf = Vec::new();
        write_dump(&mut buf, [(id, &b)]).unwrap();
        let (_, rec) = read_dump(&buf[..]).unwrap().remove(0);
        let back = rec.to_block().unwrap();
        prop_assert_eq!(back.timestamp.to_bits(), ts.to_bits());
        prop_assert_eq!(back.difficulty.to_bits(), d.to_bits());
        prop_assert_eq!(back.id().unwrap(), id);
    }
}

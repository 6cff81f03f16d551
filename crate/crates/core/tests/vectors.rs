//! Frozen vectors produced by `tests/data/gen_vectors.py` (hashlib + mpmath).

use interleave_core::block::{BlockId, Seed};
use interleave_core::pos::{next_seed, verify_seed, wait_time};
use interleave_core::pow::verify_pow;
use interleave_core::ProtocolParams;
use serde::Deserialize;

const GENESIS: &str = include_str!("data/genesis.json");
const POW: &str = include_str!("data/pow_vectors.jsonl");
const SEEDS: &str = include_str!("data/seed_vectors.jsonl");

#[derive(Deserialize)]
struct GenesisVector {
    serialization_hex: String,
    id_hex: String,
    genesis_seed_0: String,
    genesis_seed_1: String,
}

#[derive(Deserialize)]
struct PowVector {
    header_hex: String,
    nonce_hex: String,
    d_w: f64,
    expect: bool,
}

#[derive(Deserialize)]
#[allow(non_snake_case)]
struct SeedVector {
    staker_id: String,
    prev_seed_hex: String,
    seed_hex: String,
    d_s: f64,
    V: u64,
    delta: f64,
}

#[test]
fn default_genesis_matches_reference() {
    let v: GenesisVector = serde_json::from_str(GENESIS).unwrap();
    let params = ProtocolParams::default();
    assert_eq!(params.genesis_seed_0.to_hex(), v.genesis_seed_0);
    assert_eq!(params.genesis_seed_1.to_hex(), v.genesis_seed_1);
    let g = params.genesis_block();
    assert_eq!(
        hex::encode(g.canonical_bytes().unwrap()),
        v.serialization_hex
    );
    assert_eq!(g.id().unwrap(), BlockId::from_hex(&v.id_hex).unwrap());
}

#[test]
fn pow_vectors() {
    let mut n = 0;
    for line in POW.lines().filter(|l| !l.trim().is_empty()) {
        let v: PowVector = serde_json::from_str(line).unwrap();
        let header = hex::decode(&v.header_hex).unwrap();
        let nonce = hex::decode(&v.nonce_hex).unwrap();
        assert_eq!(
            verify_pow(&header, &nonce, v.d_w).unwrap(),
            v.expect,
            "vector {line}"
        );
        n += 1;
    }
    assert_eq!(n, 5);
}

#[test]
fn flipping_a_nonce_bit_breaks_the_solution() {
    let v: PowVector = serde_json::from_str(POW.lines().next().unwrap()).unwrap();
    let header = hex::decode(&v.header_hex).unwrap();
    let nonce = hex::decode(&v.nonce_hex).unwrap();
    assert!(verify_pow(&header, &nonce, 65536.0).unwrap());
    // 256 single-bit flips, then 744 two-bit flips.
    let mut rejected = 0;
    for trial in 0..1000usize {
        let mut flipped = nonce.clone();
        let a = trial % 256;
        flipped[a / 8] ^= 1 << (a % 8);
        if trial >= 256 {
            let b = (a + 1 + trial / 256 * 61) % 256;
            flipped[b / 8] ^= 1 << (b % 8);
        }
        if !verify_pow(&header, &flipped, 65536.0).unwrap() {
            rejected += 1;
        }
    }
    assert!(rejected >= 999, "only {rejected} of 1000 rejected");
}

#[test]
fn seed_vectors() {
    let mut n = 0;
    for line in SEEDS.lines().filter(|l| !l.trim().is_empty()) {
        let v: SeedVector = serde_json::from_str(line).unwrap();
        let prev = Seed::from_hex(&v.prev_seed_hex).unwrap();
        let seed = next_seed(&prev, &v.staker_id);
        assert_eq!(seed.to_hex(), v.seed_hex);
        assert!(verify_seed(&seed, &prev, &v.staker_id));
        let delta = wait_time(&seed, v.V as f64, v.d_s).unwrap();
        assert!(
            ((delta - v.delta) / v.delta).abs() < 1e-12,
            "delta {delta} vs reference {}",
            v.delta
        );
        n += 1;
    }
    assert_eq!(n, 4);
}

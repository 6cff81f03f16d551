//! Monte Carlo checks of the puzzle, the mining-time model and the staker race.

mod common;

use common::{ks_p_value, ks_statistic, mean};
use interleave_core::block::Seed;
use interleave_core::hash::sha256;
use interleave_core::pos::{best_staker_draw, next_seed, seed_draw, wait_time, StakerSpec};
use interleave_core::pow::{hash_meets_target, sample_mining_time};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_seed(rng: &mut ChaCha8Rng) -> Seed {
    let mut s = [0u8; 32];
    rng.fill(&mut s);
    Seed(s)
}

#[test]
fn pass_fraction_at_difficulty_256_is_one_in_256() {
    // Two-cell chi-square (pass / fail), 1 dof; 6.635 is the 0.01 critical value.
    let n = 1_000_000u64;
    let mut passed = 0u64;
    for i in 0..n {
        let digest = sha256(&i.to_be_bytes());
        if hash_meets_target(&digest, 256.0).unwrap() {
            passed += 1;
        }
    }
    let expected_pass = n as f64 / 256.0;
    let expected_fail = n as f64 - expected_pass;
    let chi2 = (passed as f64 - expected_pass).powi(2) / expected_pass
        + ((n - passed) as f64 - expected_fail).powi(2) / expected_fail;
    assert!(chi2 < 6.635, "chi2 = {chi2}, passed = {passed}");
}

#[test]
fn lowering_difficulty_never_invalidates() {
    for i in 0..20_000u64 {
        let digest = sha256(&i.to_le_bytes());
        if hash_meets_target(&digest, 1000.0).unwrap() {
            for d in [999.9, 500.0, 17.0, 1.0] {
                assert!(hash_meets_target(&digest, d).unwrap());
            }
        }
    }
}

#[test]
fn mining_time_mean_matches_difficulty_over_hash_rate() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let n = 1_000_000;
    let xs: Vec<f64> = (0..n)
        .map(|_| sample_mining_time(500_000.0, 5e6, &mut rng).unwrap())
        .collect();
    let m = mean(&xs);
    assert!((m - 10.0).abs() < 0.05, "mean {m}");

    let ys: Vec<f64> = (0..n)
        .map(|_| sample_mining_time(500_000.0, 1e7, &mut rng).unwrap())
        .collect();
    let ratio = mean(&ys) / m;
    assert!((ratio - 2.0).abs() < 0.02, "ratio {ratio}");
}

#[test]
fn mining_time_is_exponential() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let rate = 250.0 / 1000.0;
    let xs: Vec<f64> = (0..100_000)
        .map(|_| sample_mining_time(250.0, 1000.0, &mut rng).unwrap())
        .collect();
    let d = ks_statistic(&xs, |x| 1.0 - (-rate * x).exp());
    let p = ks_p_value(d, xs.len());
    assert!(p > 0.01, "D = {d}, p = {p}");
}

#[test]
fn wait_time_mean_over_random_seeds() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let xs: Vec<f64> = (0..1_000_000)
        .map(|_| wait_time(&random_seed(&mut rng), 5e5, 5e6).unwrap())
        .collect();
    let m = mean(&xs);
    assert!((m - 10.0).abs() < 0.05, "mean {m}");
}

#[test]
fn normalized_wait_is_unit_exponential() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let (v, d_s) = (37.0, 1234.5);
    let xs: Vec<f64> = (0..100_000)
        .map(|_| wait_time(&random_seed(&mut rng), v, d_s).unwrap() * v / d_s)
        .collect();
    let d = ks_statistic(&xs, |x| 1.0 - (-x).exp());
    let p = ks_p_value(d, xs.len());
    assert!(p > 0.01, "D = {d}, p = {p}");
    // and the raw draw is the same variate
    let s = random_seed(&mut rng);
    assert_eq!(wait_time(&s, 1.0, 1.0).unwrap(), seed_draw(&s));
}

fn race_share(stakes: &[u64], trials: usize, rng_seed: u64) -> Vec<f64> {
    let stakers: Vec<StakerSpec> = stakes
        .iter()
        .enumerate()
        .map(|(i, &s)| StakerSpec::new(format!("staker-{i}"), s))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut wins = vec![0usize; stakes.len()];
    for _ in 0..trials {
        let prev = random_seed(&mut rng);
        wins[best_staker_draw(&stakers, &prev, 1e6).unwrap().winner] += 1;
    }
    wins.iter().map(|&w| w as f64 / trials as f64).collect()
}

#[test]
fn equal_stakers_split_evenly() {
    let share = race_share(&[100, 100], 100_000, 21);
    assert!((share[0] - 0.5).abs() < 0.01, "{share:?}");
}

#[test]
fn race_share_is_proportional_to_stake() {
    let share = race_share(&[2, 1], 100_000, 22);
    assert!((share[0] - 2.0 / 3.0).abs() < 0.01, "{share:?}");

    // three stakers, 3-sigma binomial bounds
    let stakes = [5u64, 3, 2];
    let n = 100_000;
    let share = race_share(&stakes, n, 23);
    for (i, &s) in stakes.iter().enumerate() {
        let p = s as f64 / 10.0;
        let sigma = (p * (1.0 - p) / n as f64).sqrt();
        assert!(
            (share[i] - p).abs() < 3.0 * sigma,
            "staker {i}: {} vs {p}",
            share[i]
        );
    }
}

#[test]
fn race_winner_has_the_minimum_wait() {
    let stakers = [
        StakerSpec::new("a", 10),
        StakerSpec::new("b", 20),
        StakerSpec::new("c", 30),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    for _ in 0..1000 {
        let prev = random_seed(&mut rng);
        let draw = best_staker_draw(&stakers, &prev, 77.0).unwrap();
        for s in &stakers {
            let w = wait_time(&next_seed(&prev, &s.id), s.stake as f64, 77.0).unwrap();
            assert!(draw.delta <= w);
        }
        assert_eq!(draw.seed, next_seed(&prev, &stakers[draw.winner].id));
    }
}

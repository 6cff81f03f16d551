//! The hash puzzle `H(b) <= 2^256 / d_w` and the sampled model of mining time.

use num_bigint::BigUint;
use num_traits::One;
use rand::Rng;
use rand_distr::{Distribution, Exp};

use crate::hash::{digest_value, Hasher256, Sha256Hasher};
use crate::params::ParamError;

/// `floor(2^256 / d_w)`, computed exactly from the binary expansion of `d_w`.
pub fn pow_target(d_w: f64) -> Result<BigUint, ParamError> {
    if !(d_w.is_finite() && d_w >= 1.0) {
        return Err(ParamError::new("d_w", "finite and >= 1", d_w));
    }
    // d_w = mantissa * 2^exp exactly, mantissa a 53-bit integer.
    let bits = d_w.to_bits();
    let raw_exp = ((bits >> 52) & 0x7ff) as i64;
    let mantissa = (bits & ((1u64 << 52) - 1)) | (1u64 << 52);
    let exp = raw_exp - 1075;
    // 2^256 / (m * 2^e) = 2^(256 - e) / m, and m < 2^53.
    let shift = 256 - exp;
    if shift < 0 {
        return Ok(BigUint::ZERO);
    }
    let numerator = BigUint::one() << (shift as u64);
    Ok(numerator / BigUint::from(mantissa))
}

pub fn hash_meets_target(digest: &[u8; 32], d_w: f64) -> Result<bool, ParamError> {
    let target = pow_target(d_w)?;
    Ok(digest_value(digest) <= target)
}

/// True iff `H(header_bytes || nonce) <= floor(2^256 / d_w)`.
pub fn verify_pow(header_bytes: &[u8], nonce: &[u8], d_w: f64) -> Result<bool, ParamError> {
    verify_pow_with(&Sha256Hasher, header_bytes, nonce, d_w)
}

pub fn verify_pow_with(
    hasher: &dyn Hasher256,
    header_bytes: &[u8],
    nonce: &[u8],
    d_w: f64,
) -> Result<bool, ParamError> {
    let mut data = Vec::with_capacity(header_bytes.len() + nonce.len());
    data.extend_from_slice(header_bytes);
    data.extend_from_slice(nonce);
    hash_meets_target(&hasher.hash(&data), d_w)
}

/// Time for a miner of `hash_rate` to solve at difficulty `d_w`:
/// exponential with mean `d_w / hash_rate`.
pub fn sample_mining_time<R: Rng + ?Sized>(
    hash_rate: f64,
    d_w: f64,
    rng: &mut R,
) -> Result<f64, ParamError> {
    if !(hash_rate.is_finite() && hash_rate > 0.0) {
        return Err(ParamError::new("hash_rate", "finite and > 0", hash_rate));
    }
    if !(d_w.is_finite() && d_w > 0.0) {
        return Err(ParamError::new("d_w", "finite and > 0", d_w));
    }
    let rate = hash_rate / d_w;
    let exp = Exp::new(rate).map_err(|_| ParamError::new("rate", "finite and > 0", rate))?;
    Ok(exp.sample(rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn target_identity_and_powers_of_two() {
        assert_eq!(pow_target(1.0).unwrap(), BigUint::one() << 256u32);
        assert_eq!(pow_target(16.0).unwrap(), BigUint::one() << 252u32);
        assert_eq!(pow_target(2f64.powi(256)).unwrap(), BigUint::one());
        assert_eq!(pow_target(2f64.powi(300)).unwrap(), BigUint::ZERO);
        assert_eq!(pow_target(f64::MAX).unwrap(), BigUint::ZERO);
    }

    #[test]
    fn target_floors_non_integral_difficulty() {
        let expect = (BigUint::one() << 257u32) / BigUint::from(3u32);
        assert_eq!(pow_target(1.5).unwrap(), expect);
    }

    #[test]
    fn target_rejects_sub_unit_difficulty() {
        assert!(pow_target(0.5).is_err());
        assert!(pow_target(f64::NAN).is_err());
    }

    #[test]
    fn difficulty_one_accepts_everything() {
        assert!(verify_pow(b"anything", &[0xff; 32], 1.0).unwrap());
        assert!(hash_meets_target(&[0xff; 32], 1.0).unwrap());
    }

    #[test]
    fn target_is_monotone() {
        let mut prev = pow_target(1.0).unwrap();
        for d in [1.0001, 1.5, 2.0, 3.7, 1e3, 5e6, 1e15, 1e30] {
            let t = pow_target(d).unwrap();
            assert!(t < prev, "target not decreasing at {d}");
            prev = t;
        }
    }

    #[test]
    fn mining_time_replays_with_seed() {
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..5)
                .map(|_| sample_mining_time(10.0, 100.0, &mut rng).unwrap())
                .collect::<Vec<_>>()
        };
        assert_eq!(draw(3), draw(3));
        assert_ne!(draw(3), draw(4));
    }

    #[test]
    fn mining_time_rejects_zero_hash_rate() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(sample_mining_time(0.0, 10.0, &mut rng).is_err());
        assert!(sample_mining_time(-1.0, 10.0, &mut rng).is_err());
    }
}

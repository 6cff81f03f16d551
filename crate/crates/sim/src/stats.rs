//! Summary statistics, histograms and the Kolmogorov-Smirnov test.

use serde::Serialize;

use crate::SimError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Moments {
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation (n - 1 denominator).
    pub std: f64,
}

pub fn moments(xs: &[f64]) -> Moments {
    let n = xs.len();
    if n == 0 {
        return Moments {
            n,
            mean: f64::NAN,
            std: f64::NAN,
        };
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    let ss: f64 = xs.iter().map(|x| (x - mean).powi(2)).sum();
    let std = if n > 1 {
        (ss / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    Moments { n, mean, std }
}

/// Standard error of a binomial proportion.
pub fn binomial_stderr(p: f64, n: u64) -> f64 {
    if n == 0 {
        return f64::NAN;
    }
    (p * (1.0 - p) / n as f64).sqrt()
}

/// One-sample KS statistic `sup |F_n(x) - F(x)|`.
pub fn ks_statistic(xs: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// Kolmogorov survival function `Q(t) = 2 sum (-1)^(k-1) exp(-2 k^2 t^2)`.
pub fn kolmogorov_sf(t: f64) -> f64 {
    if t <= 0.0 {
        return 1.0;
    }
    if t < 1.0 {
        // Jacobi-transformed CDF series, fast where the alternating one is slow.
        let c = std::f64::consts::PI.powi(2) / (8.0 * t * t);
        let mut cdf = 0.0;
        for k in 1..=20 {
            let odd = (2 * k - 1) as f64;
            cdf += (-odd * odd * c).exp();
        }
        return (1.0 - (2.0 * std::f64::consts::PI).sqrt() / t * cdf).clamp(0.0, 1.0);
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let k = k as f64;
        let term = (-2.0 * k * k * t * t).exp();
        sum += if k as u64 % 2 == 1 { term } else { -term };
        if term < 1e-18 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Asymptotic p-value of a KS statistic `d` on `n` samples.
pub fn ks_p_value(d: f64, n: usize) -> f64 {
    kolmogorov_sf((n as f64).sqrt() * d)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

pub fn ks_exponential(xs: &[f64], rate: f64) -> KsResult {
    let statistic = ks_statistic(xs, |x| {
        if x <= 0.0 {
            0.0
        } else {
            1.0 - (-rate * x).exp()
        }
    });
    KsResult {
        statistic,
        p_value: ks_p_value(statistic, xs.len()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    pub bin_width: f64,
    /// `counts[i]` covers `[i * width, (i + 1) * width)`.
    pub counts: Vec<u64>,
    /// Samples at or beyond the last bin edge.
    pub overflow: u64,
}

pub fn histogram(xs: &[f64], bins: usize, width: f64) -> Histogram {
    let mut counts = vec![0u64; bins];
    let mut overflow = 0;
    for &x in xs {
        let i = (x / width).floor();
        if i >= 0.0 && (i as usize) < bins {
            counts[i as usize] += 1;
        } else {
            overflow += 1;
        }
    }
    Histogram {
        bin_width: width,
        counts,
        overflow,
    }
}

pub const MIN_HISTOGRAM_SAMPLES: usize = 1000;
pub const KS_SIGNIFICANCE: f64 = 0.01;

/// Histogram of inter-block times with a fit against `Exp(rate)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockTimeReport {
    pub histogram: Histogram,
    pub moments: Moments,
    pub ks: KsResult,
    pub rate: f64,
    /// KS test passes at [`KS_SIGNIFICANCE`].
    pub exponential_fit: bool,
}

pub fn block_time_report(
    deltas: &[f64],
    bins: usize,
    width: f64,
    rate: f64,
) -> Result<BlockTimeReport, SimError> {
    if deltas.len() < MIN_HISTOGRAM_SAMPLES {
        return Err(SimError::TooFewSamples {
            got: deltas.len(),
            need: MIN_HISTOGRAM_SAMPLES,
        });
    }
    let ks = ks_exponential(deltas, rate);
    Ok(BlockTimeReport {
        histogram: histogram(deltas, bins, width),
        moments: moments(deltas),
        ks,
        rate,
        exponential_fit: ks.p_value > KS_SIGNIFICANCE,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moments_of_small_sample() {
        let m = moments(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m.mean, 2.5);
        assert!((m.std - 1.2909944487358056).abs() < 1e-15);
    }

    #[test]
    fn histogram_edges() {
        let h = histogram(&[0.0, 0.99, 1.0, 2.5, 3.0, -1.0], 3, 1.0);
        assert_eq!(h.counts, vec![2, 1, 1]);
        assert_eq!(h.overflow, 2);
    }

    #[test]
    fn kolmogorov_tail_limits() {
        assert_eq!(kolmogorov_sf(0.0), 1.0);
        assert!(kolmogorov_sf(5.0) < 1e-20);
        // Q(1.36) is the textbook 5% critical value.
        assert!((kolmogorov_sf(1.358) - 0.05).abs() < 1e-3);
    }

    #[test]
    fn constant_samples_fail_the_fit() {
        let xs = vec![10.0; 5000];
        let r = block_time_report(&xs, 100, 1.0, 0.1).unwrap();
        assert!(!r.exponential_fit);
        assert_eq!(r.histogram.counts[10], 5000);
        assert_eq!(r.moments.std, 0.0);
    }

    #[test]
    fn too_few_samples_is_an_error() {
        assert!(block_time_report(&[1.0; 10], 10, 1.0, 0.1).is_err());
    }
}

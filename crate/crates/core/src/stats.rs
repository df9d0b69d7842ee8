//! Small statistics toolkit for trial aggregation.

use rand::Rng;
use serde::Serialize;
use statrs::distribution::{Binomial, ChiSquared, ContinuousCDF, DiscreteCDF, Normal};

use crate::seed;

/// A proportion with its trial count and Wilson score interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Proportion {
    pub successes: u64,
    pub trials: u64,
    pub estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl Proportion {
    /// 95% Wilson score interval.
    pub fn new(successes: u64, trials: u64) -> Self {
        let (ci_low, ci_high) = wilson_interval(successes, trials, 1.959_963_984_540_054);
        Proportion {
            successes,
            trials,
            estimate: if trials == 0 {
                f64::NAN
            } else {
                successes as f64 / trials as f64
            },
            ci_low,
            ci_high,
        }
    }
}

pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let lo = if successes == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if successes == trials {
        1.0
    } else {
        (center + half).min(1.0)
    };
    (lo, hi)
}

/// Two-sided standard normal quantile for a central `level` (e.g. 0.999).
pub fn normal_two_sided_z(level: f64) -> f64 {
    let n = Normal::new(0.0, 1.0).expect("standard normal");
    n.inverse_cdf(0.5 + level / 2.0)
}

/// Central `level` band of a Binomial(n, p) from its exact quantiles.
pub fn binomial_band(n: u64, p: f64, level: f64) -> (f64, f64) {
    let b = Binomial::new(p, n).expect("valid binomial parameters");
    let tail = (1.0 - level) / 2.0;
    (b.inverse_cdf(tail) as f64, b.inverse_cdf(1.0 - tail) as f64)
}

/// Upper tail probability of a chi-square statistic.
pub fn chi_square_p_value(statistic: f64, dof: usize) -> f64 {
    let chi = ChiSquared::new(dof as f64).expect("positive degrees of freedom");
    1.0 - chi.cdf(statistic)
}

/// Pearson chi-square statistic against a uniform law over `counts.len()` cells.
pub fn chi_square_uniform(counts: &[u64]) -> f64 {
    let total: u64 = counts.iter().sum();
    let expected = total as f64 / counts.len() as f64;
    counts
        .iter()
        .map(|&c| {
            let d = c as f64 - expected;
            d * d / expected
        })
        .sum()
}

/// Pearson correlation; zero when either sample has no variance.
pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    if x.is_empty() {
        return 0.0;
    }
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        0.0
    } else {
        sxy / (sxx * syy).sqrt()
    }
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Percentile bootstrap interval for the median.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MedianEstimate {
    pub median: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub level: f64,
    pub samples: usize,
}

pub fn bootstrap_median(values: &[f64], resamples: usize, level: f64, seed: u64) -> MedianEstimate {
    let n = values.len();
    let m = median(values);
    if n == 0 {
        return MedianEstimate {
            median: f64::NAN,
            ci_low: f64::NAN,
            ci_high: f64::NAN,
            level,
            samples: 0,
        };
    }
    let mut rng = seed::rng(seed);
    let mut meds = Vec::with_capacity(resamples);
    let mut buf = vec![0.0; n];
    for _ in 0..resamples {
        for slot in buf.iter_mut() {
            *slot = values[rng.gen_range(0..n)];
        }
        meds.push(median(&buf));
    }
    meds.sort_by(f64::total_cmp);
    let alpha = (1.0 - level) / 2.0;
    let pick = |q: f64| {
        let idx = ((q * resamples as f64).floor() as usize).min(resamples - 1);
        meds[idx]
    };
    MedianEstimate {
        median: m,
        ci_low: pick(alpha),
        ci_high: pick(1.0 - alpha),
        level,
        samples: n,
    }
}

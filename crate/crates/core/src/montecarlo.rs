//! Seeded Monte Carlo machinery: chunked parallel execution, streaming
//! moment accumulation, confidence intervals and log-log fits.
//!
//! Work is split into fixed-size chunks and chunk `i` always draws from
//! stream `i` of the experiment seed, so the reduction is bit-identical for a
//! given `(seed, trials, chunk)` no matter how rayon schedules the chunks.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::outage::OutageCurve;
use crate::rng::{stream_rng, SimRng};

/// Trials per chunk; each chunk owns one RNG stream.
pub const DEFAULT_CHUNK: usize = 4096;

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Run `trials` trials in chunks of `chunk`, calling `f(rng, count)` once per
/// chunk. Results come back in chunk order.
pub fn run_chunks<T, F>(seed: u64, trials: usize, chunk: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut SimRng, usize) -> T + Sync,
{
    let chunk = chunk.max(1);
    let n_chunks = trials.div_ceil(chunk);
    (0..n_chunks)
        .into_par_iter()
        .map(|i| {
            let count = chunk.min(trials - i * chunk);
            let mut rng = stream_rng(seed, i as u64);
            f(&mut rng, count)
        })
        .collect()
}

/// Point estimate with standard error and a 95% interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub trials: u64,
    pub ci95: (f64, f64),
}

impl Estimate {
    /// Proportion estimate with a Wilson score interval.
    pub fn from_proportion(successes: u64, trials: u64) -> Self {
        if trials == 0 {
            return Self {
                mean: 0.0,
                stderr: 0.0,
                trials: 0,
                ci95: (0.0, 1.0),
            };
        }
        let p = successes as f64 / trials as f64;
        Self {
            mean: p,
            stderr: (p * (1.0 - p) / trials as f64).sqrt(),
            trials,
            ci95: wilson_interval(successes, trials, Z95),
        }
    }

    /// Mean estimate with a normal-approximation interval.
    pub fn from_accumulator(acc: &MomentAccumulator) -> Self {
        let stderr = acc.stderr();
        let mean = acc.mean();
        Self {
            mean,
            stderr,
            trials: acc.count,
            ci95: (mean - Z95 * stderr, mean + Z95 * stderr),
        }
    }

    /// Exactly known value.
    pub fn exact(value: f64) -> Self {
        Self {
            mean: value,
            stderr: 0.0,
            trials: 0,
            ci95: (value, value),
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.ci95.0 <= x && x <= self.ci95.1
    }
}

/// Wilson score interval for `successes` out of `trials`.
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
    let lo = if successes == 0 {
        0.0
    } else {
        (center - half).max(0.0).min(p)
    };
    let hi = if successes == trials {
        1.0
    } else {
        (center + half).min(1.0).max(p)
    };
    (lo, hi)
}

const TOP_K: usize = 10;

/// Streaming mean/variance (Welford, mergeable) that also remembers the ten
/// largest samples to detect heavy tails.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MomentAccumulator {
    pub count: u64,
    mean: f64,
    m2: f64,
    top: Vec<f64>,
}

impl MomentAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
        if self.top.len() < TOP_K || x > self.top[self.top.len() - 1] {
            let pos = self.top.partition_point(|&t| t >= x);
            self.top.insert(pos, x);
            self.top.truncate(TOP_K);
        }
    }

    pub fn merge(&mut self, other: &Self) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = other.clone();
            return;
        }
        let n_a = self.count as f64;
        let n_b = other.count as f64;
        let n = n_a + n_b;
        let delta = other.mean - self.mean;
        self.mean += delta * n_b / n;
        self.m2 += other.m2 + delta * delta * n_a * n_b / n;
        self.count += other.count;
        for &x in &other.top {
            let pos = self.top.partition_point(|&t| t >= x);
            self.top.insert(pos, x);
        }
        self.top.truncate(TOP_K);
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn sum(&self) -> f64 {
        self.mean * self.count as f64
    }

    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }

    pub fn stderr(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            (self.variance() / self.count as f64).sqrt()
        }
    }

    /// Share of the total contributed by the ten largest samples.
    /// Only meaningful for non-negative samples.
    pub fn top_share(&self) -> f64 {
        let total = self.sum();
        if total <= 0.0 {
            return 0.0;
        }
        self.top.iter().sum::<f64>() / total
    }

    pub fn estimate(&self) -> Estimate {
        Estimate::from_accumulator(self)
    }
}

/// Reduce per-chunk accumulators in chunk order.
pub fn merge_all<'a, I: IntoIterator<Item = &'a MomentAccumulator>>(parts: I) -> MomentAccumulator {
    let mut acc = MomentAccumulator::new();
    for p in parts {
        acc.merge(p);
    }
    acc
}

/// Mean of `sampler` over `trials` draws with a normal 95% interval.
pub fn estimate<F>(sampler: F, trials: usize, seed: u64) -> Result<Estimate>
where
    F: Fn(&mut SimRng) -> f64 + Sync,
{
    if trials < 2 {
        return Err(Error::Domain(format!(
            "need at least 2 trials, got {trials}"
        )));
    }
    let parts = run_chunks(seed, trials, DEFAULT_CHUNK, |rng, count| {
        let mut acc = MomentAccumulator::new();
        for _ in 0..count {
            acc.push(sampler(rng));
        }
        acc
    });
    Ok(merge_all(&parts).estimate())
}

/// Probability of `event` over `trials` Bernoulli draws with a Wilson interval.
pub fn estimate_proportion<F>(event: F, trials: usize, seed: u64) -> Result<Estimate>
where
    F: Fn(&mut SimRng) -> bool + Sync,
{
    if trials < 2 {
        return Err(Error::Domain(format!(
            "need at least 2 trials, got {trials}"
        )));
    }
    let hits: u64 = run_chunks(seed, trials, DEFAULT_CHUNK, |rng, count| {
        (0..count).filter(|_| event(rng)).count() as u64
    })
    .into_iter()
    .sum();
    Ok(Estimate::from_proportion(hits, trials as u64))
}

/// Least-squares line through `log10 p` against `log10 snr`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub window: (f64, f64),
}

impl SlopeFit {
    /// Diversity estimate `d̂ = −slope`.
    pub fn diversity(&self) -> f64 {
        -self.slope
    }

    /// Coding gain recovered from `P ≈ (C·snr)^{−d}`.
    pub fn coding_gain(&self) -> f64 {
        10f64.powf(-self.intercept / self.diversity())
    }
}

/// Ordinary least squares `y = a + b x`; returns `(b, a, r²)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<(f64, f64, f64)> {
    let n = x.len();
    if n != y.len() || n < 2 {
        return Err(Error::Fit(format!("{n} points")));
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Fit("degenerate abscissae".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 {
        1.0
    } else {
        (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0)
    };
    Ok((slope, intercept, r2))
}

/// Top 10 dB of the grid among points whose outage count lies in
/// `[10, trials/10]`.
pub fn default_window(curve: &OutageCurve) -> Option<(f64, f64)> {
    let eligible: Vec<f64> = curve
        .snr_grid_db
        .iter()
        .zip(&curve.p_out)
        .filter(|(_, e)| {
            let count = (e.mean * e.trials as f64).round();
            count >= 10.0 && count <= e.trials as f64 / 10.0
        })
        .map(|(&s, _)| s)
        .collect();
    let hi = eligible.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !hi.is_finite() {
        return None;
    }
    Some((hi - 10.0, hi))
}

/// Fit `log10 P = intercept + slope·log10 snr` over the grid points inside
/// `window` (dB, inclusive). `None` selects [`default_window`].
pub fn fit_diversity(curve: &OutageCurve, window: Option<(f64, f64)>) -> Result<SlopeFit> {
    let window = match window {
        Some(w) => w,
        None => default_window(curve)
            .ok_or_else(|| Error::Fit("no grid point with usable outage counts".into()))?,
    };
    let tol = 1e-9;
    let (xs, ys): (Vec<f64>, Vec<f64>) = curve
        .snr_grid_db
        .iter()
        .zip(&curve.p_out)
        .filter(|(s, e)| **s >= window.0 - tol && **s <= window.1 + tol && e.mean > 0.0)
        .map(|(s, e)| (s / 10.0, e.mean.log10()))
        .unzip();
    if xs.len() < 3 {
        return Err(Error::Fit(format!(
            "{} usable points in window {:?}",
            xs.len(),
            window
        )));
    }
    let (slope, intercept, r2) = linear_fit(&xs, &ys)?;
    Ok(SlopeFit {
        slope,
        intercept,
        r2,
        window,
    })
}

/// Goodness-of-fit helpers.
pub mod ks {
    /// Two-sided Kolmogorov-Smirnov statistic of `samples` against `cdf`.
    /// Sorts `samples` in place.
    pub fn statistic<F: Fn(f64) -> f64>(samples: &mut [f64], cdf: F) -> f64 {
        samples.sort_by(f64::total_cmp);
        let n = samples.len() as f64;
        samples
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = cdf(x);
                (f - i as f64 / n).max((i + 1) as f64 / n - f)
            })
            .fold(0.0, f64::max)
    }

    /// Asymptotic p-value of statistic `d` for `n` samples.
    pub fn p_value(d: f64, n: usize) -> f64 {
        let sn = (n as f64).sqrt();
        let lambda = (sn + 0.12 + 0.11 / sn) * d;
        if lambda < 1e-3 {
            return 1.0;
        }
        let mut sum = 0.0;
        for k in 1..=100 {
            let kf = k as f64;
            let term = (-2.0 * kf * kf * lambda * lambda).exp();
            sum += if k % 2 == 1 { term } else { -term };
            if term < 1e-16 {
                break;
            }
        }
        (2.0 * sum).clamp(0.0, 1.0)
    }

    /// Convenience: p-value of `samples` against `cdf`.
    pub fn test<F: Fn(f64) -> f64>(samples: &mut [f64], cdf: F) -> f64 {
        let d = statistic(samples, cdf);
        p_value(d, samples.len())
    }
}

//! Empirical perplexity distributions: reservoir sampling, interpolated
//! quantiles, and log-spaced histograms.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::rng::DetRng;

/// Number of log-spaced histogram bins in a summary.
pub const HISTOGRAM_BINS: usize = 100;

/// Fixed reservoir seed: `estimate_quartiles` takes no seed parameter, so
/// the subsample it retains is a pure function of the input stream.
const RESERVOIR_SEED: u64 = 0x7171_5f72_6573_7631;

#[derive(Debug, Error, PartialEq)]
pub enum DistributionError {
    #[error("perplexity stream is empty")]
    EmptyStream,
    #[error("perplexity values must be positive and finite, got {0}")]
    BadValue(f64),
    #[error("max_in_memory must be at least 1")]
    ZeroCapacity,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub lo: f64,
    pub hi: f64,
    pub n: u64,
}

/// Summary of an observed perplexity distribution.
///
/// `min` and `max` are the extremes of the full stream. `count`, the
/// quartiles, and the histogram describe the retained sample, which is the
/// whole stream when it fits in memory and a uniform reservoir otherwise;
/// bin counts always sum to `count`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DistributionSummary {
    pub count: u64,
    pub q1: f64,
    pub q2: f64,
    pub q3: f64,
    pub min: f64,
    pub max: f64,
    pub bins: Vec<HistogramBin>,
}

impl DistributionSummary {
    /// Midpoint of the quartiles, the center of a Gaussian sampler.
    pub fn median(&self) -> f64 {
        self.q2
    }

    pub fn quartiles(&self) -> (f64, f64, f64) {
        (self.q1, self.q2, self.q3)
    }
}

/// Uniform fixed-size sample of a stream (Algorithm R).
#[derive(Debug, Clone)]
pub struct Reservoir {
    cap: usize,
    seen: u64,
    values: Vec<f64>,
    rng: DetRng,
}

impl Reservoir {
    pub fn new(cap: usize, seed: u64) -> Reservoir {
        assert!(cap > 0, "reservoir capacity must be positive");
        Reservoir {
            cap,
            seen: 0,
            values: Vec::with_capacity(cap.min(4096)),
            rng: DetRng::new(seed),
        }
    }

    pub fn push(&mut self, value: f64) {
        self.seen += 1;
        if self.values.len() < self.cap {
            self.values.push(value);
        } else {
            let j = self.rng.next_below(self.seen);
            if (j as usize) < self.cap {
                self.values[j as usize] = value;
            }
        }
    }

    /// Merge by feeding the other reservoir's retained values through this
    /// one (union then re-reservoir).
    pub fn merge(&mut self, other: &Reservoir) {
        for &v in &other.values {
            self.push(v);
        }
    }

    /// Total values offered, retained or not.
    pub fn seen(&self) -> u64 {
        self.seen
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Linear-interpolation quantile of a sorted slice: rank q·(n−1), fractional
/// part interpolated between the two neighboring order statistics.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    debug_assert!((0.0..=1.0).contains(&q));
    let rank = q * (sorted.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    if lo == hi {
        return sorted[lo];
    }
    let frac = rank - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// Log-spaced histogram of `values` over the range [min, max]. All values
/// must lie inside the range; a degenerate range collapses to one bin.
pub fn log_histogram(values: &[f64], min: f64, max: f64, bins: usize) -> Vec<HistogramBin> {
    debug_assert!(min > 0.0 && max >= min && bins > 0);
    if min == max {
        return vec![HistogramBin {
            lo: min,
            hi: max,
            n: values.len() as u64,
        }];
    }
    let lmin = min.log10();
    let lmax = max.log10();
    let width = (lmax - lmin) / bins as f64;
    let mut counts = vec![0u64; bins];
    for &v in values {
        let idx = (((v.log10() - lmin) / (lmax - lmin)) * bins as f64) as usize;
        counts[idx.min(bins - 1)] += 1;
    }
    (0..bins)
        .map(|i| HistogramBin {
            lo: 10f64.powf(lmin + width * i as f64),
            hi: if i + 1 == bins {
                max
            } else {
                10f64.powf(lmin + width * (i + 1) as f64)
            },
            n: counts[i],
        })
        .collect()
}

/// Summary of an externally tracked reservoir plus the full-stream extremes
/// its owner observed; `None` when the reservoir never saw a value.
pub(crate) fn summarize_reservoir(
    reservoir: &Reservoir,
    min: f64,
    max: f64,
) -> Option<DistributionSummary> {
    if reservoir.seen() == 0 {
        return None;
    }
    let mut retained = reservoir.values().to_vec();
    retained.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    let bins = log_histogram(&retained, min, max, HISTOGRAM_BINS);
    Some(DistributionSummary {
        count: retained.len() as u64,
        q1: quantile(&retained, 0.25),
        q2: quantile(&retained, 0.50),
        q3: quantile(&retained, 0.75),
        min,
        max,
        bins,
    })
}

/// Summarize a stream of positive perplexities.
///
/// When the stream has at most `max_in_memory` values the quartiles are
/// exact interpolated order statistics; otherwise they are exact over a
/// uniform reservoir of that size. The histogram covers the retained sample
/// with [`HISTOGRAM_BINS`] log-spaced bins between the full-stream extremes.
pub fn estimate_quartiles<I>(
    perplexities: I,
    max_in_memory: usize,
) -> Result<DistributionSummary, DistributionError>
where
    I: IntoIterator<Item = f64>,
{
    if max_in_memory == 0 {
        return Err(DistributionError::ZeroCapacity);
    }
    let mut reservoir = Reservoir::new(max_in_memory, RESERVOIR_SEED);
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for v in perplexities {
        if !v.is_finite() || v <= 0.0 {
            return Err(DistributionError::BadValue(v));
        }
        min = min.min(v);
        max = max.max(v);
        reservoir.push(v);
    }
    if reservoir.seen() == 0 {
        return Err(DistributionError::EmptyStream);
    }
    let mut retained = reservoir.values().to_vec();
    retained.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    let bins = log_histogram(&retained, min, max, HISTOGRAM_BINS);
    Ok(DistributionSummary {
        count: retained.len() as u64,
        q1: quantile(&retained, 0.25),
        q2: quantile(&retained, 0.50),
        q3: quantile(&retained, 0.75),
        min,
        max,
        bins,
    })
}

//! Keep-probability policies: Random, Stepwise (quartile step function),
//! and Gaussian (smoothed bell around the median).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::rng::keep_decision;

/// Default Gaussian spread: 9 / (2·ln 10) ≈ 1.954.
pub const DEFAULT_GAUSSIAN_BETA: f64 = 9.0 / (2.0 * std::f64::consts::LN_10);

#[derive(Debug, Error, PartialEq)]
pub enum SamplerError {
    #[error("perplexity must be positive and finite, got {0}")]
    BadPerplexity(f64),
    #[error("quartiles must be positive and strictly increasing, got ({0}, {1}, {2})")]
    BadQuartiles(f64, f64, f64),
    #[error("alpha must be positive and finite, got {0}")]
    BadAlpha(f64),
    #[error("gaussian alpha must be in (0, 1], got {0}")]
    BadGaussianAlpha(f64),
    #[error("rate must be in [0, 1], got {0}")]
    BadRate(f64),
    #[error("median must be positive and finite, got {0}")]
    BadMedian(f64),
    #[error("beta must be positive and finite, got {0}")]
    BadBeta(f64),
}

fn check_pp(pp: f64) -> Result<(), SamplerError> {
    if !pp.is_finite() || pp <= 0.0 {
        return Err(SamplerError::BadPerplexity(pp));
    }
    Ok(())
}

fn check_quartiles(q1: f64, q2: f64, q3: f64) -> Result<(), SamplerError> {
    let increasing = q1 > 0.0 && q1 < q2 && q2 < q3;
    if !increasing || !q3.is_finite() {
        return Err(SamplerError::BadQuartiles(q1, q2, q3));
    }
    Ok(())
}

/// Step-function keep-probability over the four quartile regions:
/// α/q1, α/(q2−q1), α/(q3−q2), α/q3, with interior boundaries right-closed
/// (pp = q2 falls in the second region) and every value clamped to [0, 1].
pub fn stepwise_weight(
    pp: f64,
    quartiles: (f64, f64, f64),
    alpha: f64,
) -> Result<f64, SamplerError> {
    check_pp(pp)?;
    let (q1, q2, q3) = quartiles;
    check_quartiles(q1, q2, q3)?;
    if !alpha.is_finite() || alpha <= 0.0 {
        return Err(SamplerError::BadAlpha(alpha));
    }
    Ok(stepwise_weight_unchecked(pp, q1, q2, q3, alpha))
}

pub(crate) fn stepwise_weight_unchecked(pp: f64, q1: f64, q2: f64, q3: f64, alpha: f64) -> f64 {
    let raw = if pp <= q1 {
        alpha / q1
    } else if pp <= q2 {
        alpha / (q2 - q1)
    } else if pp <= q3 {
        alpha / (q3 - q2)
    } else {
        alpha / q3
    };
    raw.clamp(0.0, 1.0)
}

/// Bell-shaped keep-probability centered on the median:
/// α · exp(−(1/β) · ((pp − median)/median)²), in [0, α] — positive
/// everywhere except the far tail, where the exponent underflows.
pub fn gaussian_weight(
    pp: f64,
    median: f64,
    alpha: f64,
    beta: f64,
) -> Result<f64, SamplerError> {
    check_pp(pp)?;
    if !median.is_finite() || median <= 0.0 {
        return Err(SamplerError::BadMedian(median));
    }
    if !beta.is_finite() || beta <= 0.0 {
        return Err(SamplerError::BadBeta(beta));
    }
    if !alpha.is_finite() || alpha <= 0.0 || alpha > 1.0 {
        return Err(SamplerError::BadGaussianAlpha(alpha));
    }
    Ok(gaussian_weight_unchecked(pp, median, alpha, beta))
}

pub(crate) fn gaussian_weight_unchecked(pp: f64, median: f64, alpha: f64, beta: f64) -> f64 {
    let z = (pp - median) / median;
    alpha * (-z * z / beta).exp()
}

/// The sampling policy with its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant")]
pub enum SamplerVariant {
    Random {
        rate: f64,
    },
    Stepwise {
        alpha: f64,
        quartiles: (f64, f64, f64),
    },
    Gaussian {
        alpha: f64,
        beta: f64,
        median: f64,
    },
}

/// A complete, serializable sampling decision rule: policy parameters plus
/// the seed that drives every keep/drop draw. This file is the only
/// coupling between calibration and a pipeline run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerSpec {
    #[serde(flatten)]
    pub variant: SamplerVariant,
    pub seed: u64,
}

impl SamplerSpec {
    pub fn random(rate: f64, seed: u64) -> SamplerSpec {
        SamplerSpec {
            variant: SamplerVariant::Random { rate },
            seed,
        }
    }

    pub fn stepwise(alpha: f64, quartiles: (f64, f64, f64), seed: u64) -> SamplerSpec {
        SamplerSpec {
            variant: SamplerVariant::Stepwise { alpha, quartiles },
            seed,
        }
    }

    pub fn gaussian(alpha: f64, beta: f64, median: f64, seed: u64) -> SamplerSpec {
        SamplerSpec {
            variant: SamplerVariant::Gaussian { alpha, beta, median },
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), SamplerError> {
        match self.variant {
            SamplerVariant::Random { rate } => {
                if !rate.is_finite() || !(0.0..=1.0).contains(&rate) {
                    return Err(SamplerError::BadRate(rate));
                }
            }
            SamplerVariant::Stepwise {
                alpha,
                quartiles: (q1, q2, q3),
            } => {
                check_quartiles(q1, q2, q3)?;
                if !alpha.is_finite() || alpha <= 0.0 {
                    return Err(SamplerError::BadAlpha(alpha));
                }
            }
            SamplerVariant::Gaussian { alpha, beta, median } => {
                if !median.is_finite() || median <= 0.0 {
                    return Err(SamplerError::BadMedian(median));
                }
                if !beta.is_finite() || beta <= 0.0 {
                    return Err(SamplerError::BadBeta(beta));
                }
                if !alpha.is_finite() || alpha <= 0.0 || alpha > 1.0 {
                    return Err(SamplerError::BadGaussianAlpha(alpha));
                }
            }
        }
        Ok(())
    }

    /// Keep-probability for one perplexity value. Assumes a validated spec;
    /// non-finite perplexities get weight 0 (they only arise from documents
    /// whose linear perplexity overflowed, which no policy wants to keep).
    pub fn weight(&self, pp: f64) -> f64 {
        if !pp.is_finite() || pp <= 0.0 {
            return 0.0;
        }
        match self.variant {
            SamplerVariant::Random { rate } => rate,
            SamplerVariant::Stepwise {
                alpha,
                quartiles: (q1, q2, q3),
            } => stepwise_weight_unchecked(pp, q1, q2, q3, alpha),
            SamplerVariant::Gaussian { alpha, beta, median } => {
                gaussian_weight_unchecked(pp, median, alpha, beta)
            }
        }
    }

    /// Weight plus the Bernoulli decision for one document.
    pub fn decide(&self, pp: f64, doc_id: &str) -> (f64, bool) {
        let w = self.weight(pp);
        (w, keep_decision(w, doc_id, self.seed))
    }
}

//! Solving a policy's α so that the mean keep-weight over a calibration
//! sample hits a target kept-fraction.

use thiserror::Error;

use super::distribution::DistributionSummary;
use super::weight::{
    gaussian_weight_unchecked, stepwise_weight_unchecked, SamplerError, SamplerSpec,
};

/// Relative tolerance on the achieved mean weight.
const TOLERANCE: f64 = 1e-3;

#[derive(Debug, Error, PartialEq)]
pub enum CalibrationError {
    #[error("calibration sample is empty")]
    EmptySample,
    #[error("sample perplexities must be positive and finite, got {0}")]
    BadSample(f64),
    #[error("target fraction must be in (0, 1), got {0}")]
    BadTarget(f64),
    #[error("target fraction {target} is unattainable; maximum achievable is {max_achievable}")]
    Unattainable { target: f64, max_achievable: f64 },
    #[error(transparent)]
    Invalid(#[from] SamplerError),
}

/// Which policy to calibrate. Stepwise quartiles and the Gaussian median
/// come from the distribution summary; Gaussian β is fixed by the caller
/// and only α is solved.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CalibratePolicy {
    Random,
    Stepwise,
    Gaussian { beta: f64 },
}

/// Solve for the sampler that keeps `target_fraction` of documents whose
/// perplexities look like `sample`.
///
/// Random needs no solving (rate = target). For Stepwise and Gaussian the
/// mean clamped weight over the sample is monotone nondecreasing and
/// continuous in α, so bisection converges; the result matches the target
/// within 0.1% relative. If even the largest admissible α cannot reach the
/// target (Gaussian α is capped at 1), the error reports the maximum
/// achievable fraction.
pub fn calibrate(
    sample: &[f64],
    target_fraction: f64,
    policy: CalibratePolicy,
    summary: &DistributionSummary,
    seed: u64,
) -> Result<SamplerSpec, CalibrationError> {
    if sample.is_empty() {
        return Err(CalibrationError::EmptySample);
    }
    for &pp in sample {
        if !pp.is_finite() || pp <= 0.0 {
            return Err(CalibrationError::BadSample(pp));
        }
    }
    if !target_fraction.is_finite() || target_fraction <= 0.0 || target_fraction >= 1.0 {
        return Err(CalibrationError::BadTarget(target_fraction));
    }
    match policy {
        CalibratePolicy::Random => Ok(SamplerSpec::random(target_fraction, seed)),
        CalibratePolicy::Stepwise => {
            let (q1, q2, q3) = summary.quartiles();
            if !(q1 > 0.0 && q1 < q2 && q2 < q3 && q3.is_finite()) {
                return Err(SamplerError::BadQuartiles(q1, q2, q3).into());
            }
            let mean = |alpha: f64| {
                sample
                    .iter()
                    .map(|&pp| stepwise_weight_unchecked(pp, q1, q2, q3, alpha))
                    .sum::<f64>()
                    / sample.len() as f64
            };
            // Every branch clamps to 1 once alpha covers the widest region
            // divisor, so the mean reaches 1 and any target < 1 brackets.
            let saturating = q3.max(q2 - q1).max(q3 - q2); // q1 < q3 already
            let alpha = bisect(mean, target_fraction, saturating)?;
            Ok(SamplerSpec::stepwise(alpha, (q1, q2, q3), seed))
        }
        CalibratePolicy::Gaussian { beta } => {
            let median = summary.median();
            if !median.is_finite() || median <= 0.0 {
                return Err(SamplerError::BadMedian(median).into());
            }
            if !beta.is_finite() || beta <= 0.0 {
                return Err(SamplerError::BadBeta(beta).into());
            }
            // Weights are α·E(pp) with E fixed, so the mean is linear in α
            // and the solution is direct; α is capped at 1.
            let mean_envelope = sample
                .iter()
                .map(|&pp| gaussian_weight_unchecked(pp, median, 1.0, beta))
                .sum::<f64>()
                / sample.len() as f64;
            let alpha = target_fraction / mean_envelope;
            if alpha > 1.0 {
                return Err(CalibrationError::Unattainable {
                    target: target_fraction,
                    max_achievable: mean_envelope,
                });
            }
            Ok(SamplerSpec::gaussian(alpha, beta, median, seed))
        }
    }
}

/// Bisection for the smallest α with mean(α) ≈ target. `saturating` is an α
/// at which the mean is known to reach its maximum.
fn bisect(
    mean: impl Fn(f64) -> f64,
    target: f64,
    saturating: f64,
) -> Result<f64, CalibrationError> {
    let max_achievable = mean(saturating);
    if max_achievable < target {
        // Only possible if clamping cannot saturate (it always can for
        // Stepwise, but keep the honest branch for safety).
        return Err(CalibrationError::Unattainable {
            target,
            max_achievable,
        });
    }
    let (mut lo, mut hi) = (0.0f64, saturating);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let m = mean(mid);
        if (m - target).abs() <= TOLERANCE * target {
            return Ok(mid);
        }
        if m < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // 200 halvings put the bracket far below f64 resolution; only a mean
    // that jumps across the target (impossible for continuous weights)
    // lands here.
    Err(CalibrationError::Unattainable {
        target,
        max_achievable,
    })
}

//! Perplexity-distribution estimation and weighted keep/drop sampling.

mod calibrate;
mod distribution;
mod rng;
mod weight;

pub use calibrate::{calibrate, CalibratePolicy, CalibrationError};
pub(crate) use distribution::summarize_reservoir;
pub use distribution::{
    estimate_quartiles, quantile, DistributionError, DistributionSummary, HistogramBin,
    Reservoir, HISTOGRAM_BINS,
};
pub use rng::{keep_decision, keyed_hash, keyed_unit, DetRng};
pub use weight::{
    gaussian_weight, stepwise_weight, SamplerError, SamplerSpec, SamplerVariant,
    DEFAULT_GAUSSIAN_BETA,
};

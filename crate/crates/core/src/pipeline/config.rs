//! Run configuration and the report a run produces.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::sampling::{DistributionSummary, SamplerSpec};

use super::PipelineError;

/// Everything a sampling run depends on. Two runs with equal configs (and
/// therefore equal seeds, carried by the sampler) produce byte-identical
/// kept shards and sidecars.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    /// Input files or glob patterns, JSON-lines, optionally gzipped.
    pub input_paths: Vec<String>,
    /// JSON key holding the document text.
    pub text_field: String,
    /// ARPA model to score with.
    pub model_path: PathBuf,
    /// Keep/drop policy, parameters, and the run seed.
    pub sampler: SamplerSpec,
    pub output_dir: PathBuf,
    /// Number of kept documents to split into `holdout.jsonl.gz` (0 = none).
    pub holdout_count: u64,
    /// Records per kept output shard.
    pub shard_size: usize,
    /// Bernoulli rate used by the separate quartile-estimation step; the
    /// main run carries it only so one config file can drive both phases.
    pub subsample_for_quartiles: f64,
    /// Abort when errored/seen exceeds this fraction.
    pub error_budget: f64,
    /// Worker threads for scoring; 0 uses the rayon default.
    pub threads: usize,
    /// Reservoir capacity for the report's distribution summaries.
    pub max_in_memory: usize,
}

impl RunConfig {
    pub fn new(
        input_paths: Vec<String>,
        model_path: impl Into<PathBuf>,
        sampler: SamplerSpec,
        output_dir: impl Into<PathBuf>,
    ) -> RunConfig {
        RunConfig {
            input_paths,
            text_field: "text".to_string(),
            model_path: model_path.into(),
            sampler,
            output_dir: output_dir.into(),
            holdout_count: 0,
            shard_size: 100_000,
            subsample_for_quartiles: 0.1,
            error_budget: 0.01,
            threads: 0,
            max_in_memory: 100_000,
        }
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.input_paths.is_empty() {
            return Err(PipelineError::Config("input_paths is empty".into()));
        }
        if self.text_field.is_empty() {
            return Err(PipelineError::Config("text_field is empty".into()));
        }
        if self.shard_size == 0 {
            return Err(PipelineError::Config("shard_size must be positive".into()));
        }
        if self.max_in_memory == 0 {
            return Err(PipelineError::Config("max_in_memory must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.subsample_for_quartiles) {
            return Err(PipelineError::Config(format!(
                "subsample_for_quartiles must be in [0, 1], got {}",
                self.subsample_for_quartiles
            )));
        }
        if !(0.0..=1.0).contains(&self.error_budget) {
            return Err(PipelineError::Config(format!(
                "error_budget must be in [0, 1], got {}",
                self.error_budget
            )));
        }
        self.sampler.validate()?;
        Ok(())
    }
}

/// What a run did. Distribution summaries are `None` when the corresponding
/// set was empty (no scored documents / nothing kept).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub docs_seen: u64,
    pub docs_kept: u64,
    pub docs_errored: u64,
    /// docs_kept / (docs_seen − docs_errored); 0 when nothing was scored.
    pub kept_fraction: f64,
    pub input_summary: Option<DistributionSummary>,
    pub kept_summary: Option<DistributionSummary>,
    /// Wall-clock seconds for the whole run.
    pub wall_time: f64,
    pub seed: u64,
}

//! The streaming end-to-end run: ingest JSON-lines shards, score every
//! document, decide keep/drop, and write the sampled corpus with its
//! sidecar, report, and distribution plots.

mod config;
mod holdout;
mod ingest;
mod run;
mod stats;

use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::lm::ArpaError;
use crate::sampling::{DistributionError, SamplerError};

pub use config::{RunConfig, RunReport};
pub use holdout::{split_holdout, HoldoutReport};
pub use ingest::{
    expand_inputs, ingest, open_text_reader, DocumentReader, IngestedRecord, RecordError,
    RecordErrorKind,
};
pub use run::{run_sampling, run_with_documents, SidecarRecord};
pub use stats::{emit_stats, StatsReport};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("no input files matched `{pattern}`")]
    NoInputs { pattern: String },
    #[error("invalid glob pattern: {0}")]
    Pattern(#[from] glob::PatternError),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("invalid sampler: {0}")]
    Sampler(#[from] SamplerError),
    #[error("model: {0}")]
    Model(#[from] ArpaError),
    #[error("{errored} of {seen} documents failed, exceeding the error budget of {budget}")]
    ErrorBudget { errored: u64, seen: u64, budget: f64 },
    #[error("requested holdout of {requested} documents but only {available} are kept")]
    HoldoutTooLarge { requested: u64, available: u64 },
    #[error("scores sidecar {path} has no records")]
    EmptyScores { path: PathBuf },
    #[error(transparent)]
    Distribution(#[from] DistributionError),
}

pub(crate) fn io_err(path: &Path, source: io::Error) -> PipelineError {
    PipelineError::Io {
        path: path.to_path_buf(),
        source,
    }
}

//! Corpus curation by language-model perplexity.
//!
//! The crate trains interpolated Kneser-Ney n-gram models, scores documents
//! line by line, and subsamples a document stream according to configurable
//! perplexity-based weights. Everything is streaming and deterministic: a
//! run is reproducible from its input paths, model, sampler, and seed alone,
//! regardless of thread count.
//!
//! The pieces compose in pipeline order:
//!
//! * [`lm`] — training, querying, and ARPA serialization of the model;
//! * [`perplexity`] — per-sentence and per-document scoring;
//! * [`sampling`] — quartile estimation, keep-weights, and calibration;
//! * [`pipeline`] — the streaming sample run, holdout split, and reports.

pub mod lm;
pub mod perplexity;
pub mod pipeline;
pub mod sampling;

pub use lm::{load_model, save_model, train_model, NGramModel, TrainOptions};
pub use perplexity::{document_perplexity, score_stream, Document, PerplexityRecord};
pub use pipeline::{run_sampling, split_holdout, RunConfig, RunReport};
pub use sampling::{
    calibrate, estimate_quartiles, keep_decision, DistributionSummary, SamplerSpec,
};

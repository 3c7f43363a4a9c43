//! Interpolated Kneser-Ney n-gram language models.
//!
//! Models are trained from whitespace-tokenized lines, queried in log10
//! space through longest-suffix backoff, and round-tripped through the
//! textual ARPA format.

mod arpa;
mod counts;
mod model;
mod train;
mod vocab;

pub use arpa::{load_model, read_model, save_model, write_model, ArpaError};
pub use counts::TrainingCounts;
pub use model::{NGramEntry, NGramModel, QueryError};
pub use train::{train_model, train_model_with, TrainError, TrainOptions};
pub use vocab::{TokenId, Vocabulary, BOS, BOS_TOKEN, EOS, EOS_TOKEN, UNK, UNK_TOKEN};

//! Sentence- and document-level perplexity.
//!
//! A line's score is the sum of per-token log10 probabilities including the
//! closing `</s>` term. Sentence perplexity normalizes by the number of
//! scored terms; document perplexity deliberately normalizes by the number
//! of LINES — high absolute values are expected and downstream consumers
//! treat them as a ranking signal, not cross-entropy.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lm::NGramModel;

/// Where a document came from: input path (or synthetic origin) and the
/// zero-based record index within it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocSource {
    pub path: String,
    pub record: u64,
}

/// One document: an id unique within the run and its raw text lines.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub id: String,
    pub lines: Vec<String>,
    pub source: DocSource,
}

impl Document {
    pub fn new(id: impl Into<String>, lines: Vec<String>, source: DocSource) -> Document {
        Document {
            id: id.into(),
            lines,
            source,
        }
    }
}

/// Perplexity of one document. The log10 value is the stored truth;
/// [`perplexity`](PerplexityRecord::perplexity) may overflow to +inf for
/// extreme documents and is clamped only at that final conversion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerplexityRecord {
    pub doc_id: String,
    pub log10_pp: f64,
    pub line_count: u64,
    pub token_count: u64,
}

impl PerplexityRecord {
    /// Linear perplexity, `10^log10_pp`.
    pub fn perplexity(&self) -> f64 {
        10f64.powf(self.log10_pp)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ScoreError {
    #[error("document `{doc_id}` has no lines")]
    EmptyDocument { doc_id: String },
}

/// Perplexity of one sentence: `10^{−score/N}` where N counts the scored
/// terms (tokens plus the `</s>` term).
pub fn sentence_perplexity(model: &NGramModel, sentence: &str) -> f64 {
    let (score, tokens) = model.score_line(sentence);
    10f64.powf(-score / (tokens + 1) as f64)
}

/// Document perplexity: `10^{−(Σ line scores)/L}` over the document's L
/// lines. Note the normalization by line count, not token count; see the
/// module docs for why. Blank lines are scored (they contribute the
/// `</s>`-only term) and counted in L.
pub fn document_perplexity(
    model: &NGramModel,
    doc: &Document,
) -> Result<PerplexityRecord, ScoreError> {
    if doc.lines.is_empty() {
        return Err(ScoreError::EmptyDocument {
            doc_id: doc.id.clone(),
        });
    }
    let mut total = 0.0;
    let mut tokens = 0u64;
    let mut ids = Vec::new();
    for line in &doc.lines {
        model.map_line(line, &mut ids);
        total += model.score_line_ids(&ids);
        tokens += ids.len() as u64;
    }
    Ok(PerplexityRecord {
        doc_id: doc.id.clone(),
        log10_pp: -total / doc.lines.len() as f64,
        line_count: doc.lines.len() as u64,
        token_count: tokens,
    })
}

/// Score a stream of documents, one record per document in input order.
/// Zero-line documents surface on the error side of the stream instead of
/// aborting it.
pub fn score_stream<'a, I>(
    model: &'a NGramModel,
    docs: I,
) -> impl Iterator<Item = Result<PerplexityRecord, ScoreError>> + 'a
where
    I: IntoIterator<Item = Document> + 'a,
{
    docs.into_iter()
        .map(move |doc| document_perplexity(model, &doc))
}

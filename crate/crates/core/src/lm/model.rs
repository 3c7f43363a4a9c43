//! The queryable backoff model and its scoring primitives.

use rustc_hash::FxHashMap;
use smallvec::SmallVec;
use thiserror::Error;

use super::vocab::{TokenId, Vocabulary, BOS, EOS, UNK};

type Gram = Box<[TokenId]>;

/// Sentinel log10 probability stored on the `<s>` unigram: `<s>` is never a
/// predicted outcome, but its entry must exist to carry a backoff weight.
pub(crate) const BOS_LOG10_PROB: f64 = -99.0;

/// One stored n-gram: its full interpolated probability and, below the top
/// order, the backoff weight applied when this gram is a matched context
/// that could not be extended.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NGramEntry {
    pub log10_prob: f64,
    /// log10 of the backoff weight; 0.0 when the gram was never extended
    /// (weight 1) and always 0.0 at the top order.
    pub log10_backoff: f64,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum QueryError {
    #[error("`<s>` is context-only and cannot be predicted")]
    BosPrediction,
    #[error("context of {len} tokens exceeds the model maximum of {max}")]
    ContextTooLong { len: usize, max: usize },
}

/// An order-N backoff model over interned tokens.
///
/// `tables[k-1]` maps k-grams to entries. Invariants, maintained by training
/// and checked on ARPA load: every suffix of a stored gram is stored, every
/// stored probability is at most 0 in log10, and `<unk>` has a positive
/// unigram probability so no query can return zero.
#[derive(Debug, Clone)]
pub struct NGramModel {
    order: usize,
    vocab: Vocabulary,
    tables: Vec<FxHashMap<Gram, NGramEntry>>,
}

impl NGramModel {
    pub(crate) fn new(order: usize, vocab: Vocabulary) -> NGramModel {
        NGramModel {
            order,
            vocab,
            tables: vec![FxHashMap::default(); order],
        }
    }

    pub(crate) fn insert(&mut self, gram: &[TokenId], entry: NGramEntry) {
        self.tables[gram.len() - 1].insert(gram.into(), entry);
    }

    pub(crate) fn entry_mut(&mut self, gram: &[TokenId]) -> Option<&mut NGramEntry> {
        self.tables[gram.len() - 1].get_mut(gram)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn entry(&self, gram: &[TokenId]) -> Option<&NGramEntry> {
        self.tables.get(gram.len().wrapping_sub(1))?.get(gram)
    }

    /// Number of stored k-grams.
    pub fn table_len(&self, k: usize) -> usize {
        self.tables[k - 1].len()
    }

    /// Iterate stored k-grams in unspecified order.
    pub fn grams(&self, k: usize) -> impl Iterator<Item = (&[TokenId], &NGramEntry)> {
        self.tables[k - 1].iter().map(|(g, e)| (g.as_ref(), e))
    }

    /// Conditional probability `p(word | context)` in linear space.
    ///
    /// The context is the preceding tokens, oldest first, and must not be
    /// longer than `order - 1`; `word` must not be `<s>`. Ids outside the
    /// vocabulary behave like `<unk>` (they match no stored gram).
    pub fn prob(&self, word: TokenId, context: &[TokenId]) -> Result<f64, QueryError> {
        Ok(10f64.powf(self.log10_prob(word, context)?))
    }

    /// `log10 p(word | context)`; see [`prob`](NGramModel::prob).
    pub fn log10_prob(&self, word: TokenId, context: &[TokenId]) -> Result<f64, QueryError> {
        if word == BOS {
            return Err(QueryError::BosPrediction);
        }
        if context.len() > self.order - 1 {
            return Err(QueryError::ContextTooLong {
                len: context.len(),
                max: self.order - 1,
            });
        }
        Ok(self.log10_prob_raw(word, context))
    }

    /// Longest-suffix-match backoff query (no precondition checks): find the
    /// longest stored gram ending in `word`, multiplying in the backoff
    /// weight of every longer context that was matched but not extended.
    fn log10_prob_raw(&self, word: TokenId, context: &[TokenId]) -> f64 {
        let start = context.len().saturating_sub(self.order - 1);
        let mut ctx = &context[start..];
        let mut backoff = 0.0;
        let mut key: SmallVec<[TokenId; 8]> = SmallVec::with_capacity(ctx.len() + 1);
        loop {
            key.clear();
            key.extend_from_slice(ctx);
            key.push(word);
            if let Some(e) = self.tables[ctx.len()].get(key.as_slice()) {
                return e.log10_prob + backoff;
            }
            if ctx.is_empty() {
                // No unigram for `word` (out-of-vocabulary id): score as <unk>.
                let unk = self.tables[0]
                    .get([UNK].as_slice())
                    .expect("model invariant: <unk> unigram is always present");
                return unk.log10_prob + backoff;
            }
            if let Some(c) = self.tables[ctx.len() - 1].get(ctx) {
                backoff += c.log10_backoff;
            }
            ctx = &ctx[1..];
        }
    }

    /// Map a whitespace-tokenized line to ids, `<unk>` for unseen tokens.
    /// A literal `<s>` also maps to `<unk>`, mirroring training: the
    /// begin-of-line sentinel is context-only and can never be an outcome.
    pub fn map_line(&self, line: &str, out: &mut Vec<TokenId>) {
        out.clear();
        out.extend(line.split_whitespace().map(|t| {
            let id = self.vocab.id_or_unk(t);
            if id == BOS {
                UNK
            } else {
                id
            }
        }));
    }

    /// Total log10 score of a tokenized line: each token predicted from the
    /// `<s>`-seeded history, plus the closing `</s>` term. The returned
    /// value is a sum of `ids.len() + 1` per-token log-probabilities.
    pub fn score_line_ids(&self, ids: &[TokenId]) -> f64 {
        let max_ctx = self.order - 1;
        let mut ctx: SmallVec<[TokenId; 8]> = SmallVec::new();
        if max_ctx > 0 {
            ctx.push(BOS);
        }
        let mut total = 0.0;
        for &id in ids.iter().chain([EOS].iter()) {
            total += self.log10_prob_raw(id, &ctx);
            if max_ctx > 0 {
                if ctx.len() == max_ctx {
                    ctx.remove(0);
                }
                ctx.push(id);
            }
        }
        total
    }

    /// [`score_line_ids`](NGramModel::score_line_ids) for a raw text line;
    /// returns the score and the number of tokens (excluding `</s>`).
    pub fn score_line(&self, line: &str) -> (f64, usize) {
        let mut ids = Vec::new();
        self.map_line(line, &mut ids);
        (self.score_line_ids(&ids), ids.len())
    }

    /// A copy of the model truncated to a lower order (backoff weights at
    /// the new top order are dropped, as they would be in training).
    pub fn truncate_to(&self, order: usize) -> NGramModel {
        assert!(order >= 1 && order <= self.order);
        let mut tables = self.tables[..order].to_vec();
        for entry in tables[order - 1].values_mut() {
            entry.log10_backoff = 0.0;
        }
        NGramModel {
            order,
            vocab: self.vocab.clone(),
            tables,
        }
    }
}

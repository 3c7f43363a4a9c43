//! Model estimation: counting, discounting, and interpolation.

use rustc_hash::FxHashMap;
use thiserror::Error;

use super::counts::TrainingCounts;
use super::model::{NGramEntry, NGramModel, BOS_LOG10_PROB};
use super::vocab::{TokenId, Vocabulary, BOS, BOS_TOKEN, UNK};

type Gram = Box<[TokenId]>;

/// Probability floor for `<unk>` if interpolation ever left it at zero.
/// With a positive discount the interpolated mass already guarantees a
/// positive value, so this is a safety net, not a tuning knob.
const UNK_FLOOR: f64 = 1e-7;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TrainError {
    #[error("model order must be at least 1, got {0}")]
    InvalidOrder(usize),
    #[error("training corpus has no non-empty lines")]
    EmptyCorpus,
}

#[derive(Debug, Clone)]
pub struct TrainOptions {
    pub order: usize,
    /// Tokens occurring fewer than this many times are replaced by `<unk>`
    /// before counting. 0 and 1 both keep every token.
    pub min_count: u64,
}

impl TrainOptions {
    pub fn new(order: usize) -> TrainOptions {
        TrainOptions {
            order,
            min_count: 0,
        }
    }
}

/// Train an interpolated Kneser-Ney model of the given order over
/// whitespace-tokenized lines.
///
/// Each line is wrapped in `<s> ... </s>`; a literal `<s>` token inside a
/// line is treated as unknown (it cannot be an outcome). One discount per
/// order comes from counts-of-counts; lower orders use continuation counts
/// except for `<s>`-initial grams, which keep their raw counts.
pub fn train_model<I>(lines: I, order: usize) -> Result<NGramModel, TrainError>
where
    I: IntoIterator,
    I::Item: AsRef<str>,
{
    if order < 1 {
        return Err(TrainError::InvalidOrder(order));
    }
    let mut vocab = Vocabulary::new();
    let mut counts = TrainingCounts::new(order);
    let mut ids: Vec<TokenId> = Vec::new();
    for line in lines {
        ids.clear();
        for tok in line.as_ref().split_whitespace() {
            ids.push(if tok == BOS_TOKEN {
                UNK
            } else {
                vocab.intern(tok)
            });
        }
        counts.add_line(&ids);
    }
    build(counts, vocab)
}

/// Like [`train_model`], with a rare-token cutoff. The corpus is consumed
/// twice when `min_count > 1` (once for token frequencies, once for
/// counting), so the caller supplies a factory that re-yields the lines.
pub fn train_model_with<F, I>(mut corpus: F, options: &TrainOptions) -> Result<NGramModel, TrainError>
where
    F: FnMut() -> I,
    I: IntoIterator,
    I::Item: AsRef<str>,
{
    if options.order < 1 {
        return Err(TrainError::InvalidOrder(options.order));
    }
    if options.min_count <= 1 {
        return train_model(corpus(), options.order);
    }
    let mut freq: FxHashMap<String, u64> = FxHashMap::default();
    for line in corpus() {
        for tok in line.as_ref().split_whitespace() {
            if let Some(n) = freq.get_mut(tok) {
                *n += 1;
            } else {
                freq.insert(tok.to_string(), 1);
            }
        }
    }
    let mut vocab = Vocabulary::new();
    let mut counts = TrainingCounts::new(options.order);
    let mut ids: Vec<TokenId> = Vec::new();
    for line in corpus() {
        ids.clear();
        for tok in line.as_ref().split_whitespace() {
            let kept = tok != BOS_TOKEN && freq.get(tok).copied().unwrap_or(0) >= options.min_count;
            ids.push(if kept { vocab.intern(tok) } else { UNK });
        }
        counts.add_line(&ids);
    }
    build(counts, vocab)
}

/// Assemble the model from finished count tables, level by level. Linear
/// probabilities are carried between levels so each interpolation step uses
/// the exact lower-order value rather than a log round-trip.
fn build(mut counts: TrainingCounts, vocab: Vocabulary) -> Result<NGramModel, TrainError> {
    counts.finish();
    if counts.nonempty_lines() == 0 {
        return Err(TrainError::EmptyCorpus);
    }
    let order = counts.order();
    let discounts: Vec<f64> = (1..=order).map(|k| counts.discount(k)).collect();
    let vocab_len = vocab.len();
    let base = 1.0 / vocab.predicted_len() as f64;
    let mut model = NGramModel::new(order, vocab);

    // Unigram level: interpolate adjusted counts with the uniform base
    // distribution over the predicted vocabulary. This keeps the unigram
    // distribution strictly positive (in particular for <unk>) and summing
    // to one by construction.
    let d1 = discounts[0];
    let mut total = 0u64;
    let mut types = 0u64;
    for id in 0..vocab_len as TokenId {
        if id == BOS {
            continue;
        }
        let a = counts.adjusted(&[id]);
        total += a;
        if a > 0 {
            types += 1;
        }
    }
    let mut unigram_p = vec![0.0f64; vocab_len];
    for id in 0..vocab_len as TokenId {
        if id == BOS {
            continue;
        }
        let p = if total == 0 {
            base
        } else {
            let a = counts.adjusted(&[id]) as f64;
            (a - d1).max(0.0) / total as f64 + d1 * types as f64 / total as f64 * base
        };
        unigram_p[id as usize] = p;
    }
    if unigram_p[UNK as usize] <= 0.0 {
        let rest: f64 = unigram_p
            .iter()
            .enumerate()
            .filter(|&(id, _)| id != UNK as usize && id != BOS as usize)
            .map(|(_, p)| p)
            .sum();
        let scale = (1.0 - UNK_FLOOR) / rest;
        for (id, p) in unigram_p.iter_mut().enumerate() {
            if id == BOS as usize {
                continue;
            }
            *p = if id == UNK as usize { UNK_FLOOR } else { *p * scale };
        }
    }
    for id in 0..vocab_len as TokenId {
        let entry = if id == BOS {
            NGramEntry {
                log10_prob: BOS_LOG10_PROB,
                log10_backoff: 0.0,
            }
        } else {
            NGramEntry {
                log10_prob: unigram_p[id as usize].log10(),
                log10_backoff: 0.0,
            }
        };
        model.insert(&[id], entry);
    }

    // Higher orders. For each level: aggregate the extension mass of every
    // context (which yields the backoff weight written onto the context's
    // entry one level down), then interpolate each stored gram with its
    // suffix probability from the previous level.
    let mut prev: FxHashMap<Gram, f64> = FxHashMap::default();
    for k in 2..=order {
        let dk = discounts[k - 1];
        struct Agg {
            denom: u64,
            types: u64,
        }
        let mut agg: FxHashMap<Gram, Agg> = FxHashMap::default();
        for gram in counts.grams(k) {
            let a = counts.adjusted(gram);
            let ctx = &gram[..k - 1];
            if let Some(e) = agg.get_mut(ctx) {
                e.denom += a;
                e.types += 1;
            } else {
                agg.insert(ctx.into(), Agg { denom: a, types: 1 });
            }
        }
        for (ctx, e) in &agg {
            let weight = dk * e.types as f64 / e.denom as f64;
            model
                .entry_mut(ctx)
                .expect("prefix closure: every extended context is stored")
                .log10_backoff = weight.log10();
        }
        let mut cur: FxHashMap<Gram, f64> = FxHashMap::default();
        for gram in counts.grams(k) {
            let a = counts.adjusted(gram) as f64;
            let e = &agg[&gram[..k - 1]];
            let lower = if k == 2 {
                unigram_p[gram[1] as usize]
            } else {
                prev[&gram[1..]]
            };
            let p = (a - dk).max(0.0) / e.denom as f64
                + dk * e.types as f64 / e.denom as f64 * lower;
            model.insert(
                gram,
                NGramEntry {
                    log10_prob: p.log10(),
                    log10_backoff: 0.0,
                },
            );
            cur.insert(gram.into(), p);
        }
        prev = cur;
    }
    Ok(model)
}

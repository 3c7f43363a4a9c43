//! Brute-force interpolated Kneser-Ney reference model.
//!
//! This is a deliberately naive second derivation of the smoothing math:
//! string-keyed count tables, recomputed denominators, and the textbook
//! recursion evaluated recursively on every query. It shares no code with
//! the library so the two can check each other. Quadratic scans are fine
//! here; it only ever sees toy corpora.

use std::collections::HashMap;

pub const BOS: &str = "<s>";
pub const EOS: &str = "</s>";
pub const UNK: &str = "<unk>";

pub struct OracleLm {
    order: usize,
    /// raw[k-1] holds counts of k-token windows over `<s> tokens </s>`
    /// padded lines; the bare `<s>` unigram is never counted.
    raw: Vec<HashMap<Vec<String>, u64>>,
    /// Predicted vocabulary: every corpus token plus `</s>` and `<unk>`,
    /// excluding `<s>` (which is context-only).
    vocab: Vec<String>,
    discounts: Vec<f64>,
}

impl OracleLm {
    pub fn train(lines: &[&str], order: usize) -> OracleLm {
        assert!(order >= 1, "oracle order must be at least 1");
        let mut raw: Vec<HashMap<Vec<String>, u64>> = vec![HashMap::new(); order];
        let mut vocab: Vec<String> = vec![UNK.to_string(), EOS.to_string()];
        for line in lines {
            let mut padded: Vec<String> = vec![BOS.to_string()];
            for tok in line.split_whitespace() {
                if !vocab.iter().any(|v| v == tok) {
                    vocab.push(tok.to_string());
                }
                padded.push(tok.to_string());
            }
            padded.push(EOS.to_string());
            for k in 1..=order {
                for win in padded.windows(k) {
                    if k == 1 && win[0] == BOS {
                        continue;
                    }
                    *raw[k - 1].entry(win.to_vec()).or_insert(0) += 1;
                }
            }
        }
        let mut oracle = OracleLm {
            order,
            raw,
            vocab,
            discounts: Vec::new(),
        };
        oracle.discounts = (1..=order).map(|k| oracle.discount(k)).collect();
        oracle
    }

    /// Adjusted count: raw at the highest order and for `<s>`-initial grams,
    /// otherwise the number of distinct single-token left extensions.
    fn adjusted(&self, gram: &[String]) -> u64 {
        let k = gram.len();
        if k == self.order || gram[0] == BOS {
            return self.raw[k - 1].get(gram).copied().unwrap_or(0);
        }
        self.raw[k]
            .keys()
            .filter(|ext| ext[1..] == *gram)
            .count() as u64
    }

    /// Chen-Goodman absolute discount from counts-of-counts of the adjusted
    /// counts at order k, with the degenerate fallback and clamp.
    fn discount(&self, k: usize) -> f64 {
        let mut n1 = 0u64;
        let mut n2 = 0u64;
        for gram in self.raw[k - 1].keys() {
            match self.adjusted(gram) {
                1 => n1 += 1,
                2 => n2 += 1,
                _ => {}
            }
        }
        if n1 == 0 || n1 + 2 * n2 == 0 {
            return 0.5;
        }
        (n1 as f64 / (n1 + 2 * n2) as f64).clamp(0.0, 0.999)
    }

    /// Map a token onto the predicted vocabulary (`<unk>` when unseen).
    fn canon<'a>(&'a self, tok: &'a str) -> &'a str {
        if tok == BOS || self.vocab.iter().any(|v| v == tok) {
            tok
        } else {
            UNK
        }
    }

    fn extensions(&self, ctx: &[String]) -> (u64, u64) {
        let k = ctx.len() + 1;
        let mut denom = 0u64;
        let mut types = 0u64;
        for gram in self.raw[k - 1].keys() {
            if gram[..k - 1] == *ctx {
                denom += self.adjusted(gram);
                types += 1;
            }
        }
        (denom, types)
    }

    /// Full interpolated probability of a gram whose count is positive (the
    /// suffix-closure of counting keeps every recursive step on seen grams).
    fn interpolated(&self, ctx: &[String], word: &str) -> f64 {
        if ctx.is_empty() {
            let d = self.discounts[0];
            let mut total = 0u64;
            let mut types = 0u64;
            for w in &self.vocab {
                let a = self.adjusted(std::slice::from_ref(w));
                total += a;
                if a > 0 {
                    types += 1;
                }
            }
            let base = 1.0 / self.vocab.len() as f64;
            if total == 0 {
                return base;
            }
            let a = self.adjusted(&[word.to_string()]);
            let head = (a as f64 - d).max(0.0) / total as f64;
            return head + d * types as f64 / total as f64 * base;
        }
        let d = self.discounts[ctx.len()];
        let (denom, types) = self.extensions(ctx);
        let mut gram = ctx.to_vec();
        gram.push(word.to_string());
        let a = self.adjusted(&gram);
        let head = (a as f64 - d).max(0.0) / denom as f64;
        head + d * types as f64 / denom as f64 * self.interpolated(&ctx[1..], word)
    }

    /// Backoff weight of a context: the discounted mass of its extension
    /// distribution, or 1 when the context was never extended.
    fn backoff(&self, ctx: &[String]) -> f64 {
        let (denom, types) = self.extensions(ctx);
        if denom == 0 {
            return 1.0;
        }
        let d = self.discounts[ctx.len()];
        d * types as f64 / denom as f64
    }

    /// Conditional probability with longest-suffix matching: unseen grams
    /// back off to the next shorter context, multiplying in its backoff
    /// weight. Unknown tokens map to `<unk>`.
    pub fn prob(&self, context: &[&str], word: &str) -> f64 {
        let word = self.canon(word).to_string();
        let start = context.len().saturating_sub(self.order - 1);
        let mut ctx: Vec<String> = context[start..]
            .iter()
            .map(|t| self.canon(t).to_string())
            .collect();
        let mut weight = 1.0;
        loop {
            let mut gram = ctx.clone();
            gram.push(word.clone());
            let seen = self.raw[gram.len() - 1].get(&gram).copied().unwrap_or(0) > 0;
            if seen || ctx.is_empty() {
                return weight * self.interpolated(&ctx, &word);
            }
            weight *= self.backoff(&ctx);
            ctx.remove(0);
        }
    }

    /// Total log10 score of a line: every token predicted left to right from
    /// a `<s>`-seeded context, plus the closing `</s>` term.
    pub fn score_line(&self, line: &str) -> f64 {
        let mut ctx: Vec<&str> = vec![BOS];
        let mut total = 0.0;
        for tok in line.split_whitespace().chain(std::iter::once(EOS)) {
            total += self.prob(&ctx, tok).log10();
            ctx.push(tok);
        }
        total
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab.len()
    }
}

#[cfg(test)]
mod pinned {
    use super::*;

    /// Hand-derived values for the corpus {"a b", "a b", "b a"} at order 2.
    /// With adjusted unigram counts all equal to 2 the unigram discount
    /// falls back to 0.5, the bigram discount is 3/(3+6) = 1/3, and every
    /// probability reduces to a small rational.
    #[test]
    fn order2_toy_corpus_matches_hand_computation() {
        let lm = OracleLm::train(&["a b", "a b", "b a"], 2);
        let eps = 1e-15;
        assert!((lm.prob(&["<s>"], "a") - 0.625).abs() < eps);
        assert!((lm.prob(&["<s>"], "b") - 7.0 / 24.0).abs() < eps);
        assert!((lm.prob(&["a"], "b") - 0.625).abs() < eps);
        assert!((lm.prob(&["a"], "</s>") - 7.0 / 24.0).abs() < eps);
        // Unseen bigram (a, a): backoff 2/9 times unigram 5/16.
        assert!((lm.prob(&["a"], "a") - 5.0 / 72.0).abs() < eps);
        assert!((lm.prob(&[], "a") - 0.3125).abs() < eps);
        assert!((lm.prob(&[], "<unk>") - 0.0625).abs() < eps);
        // All three terms of "a b" are 5/8, so its perplexity is exactly 1.6.
        let pp = 10f64.powf(-lm.score_line("a b") / 3.0);
        assert!((pp - 1.6).abs() < 1e-12);
        // All three terms of "b a" are 7/24.
        let pp = 10f64.powf(-lm.score_line("b a") / 3.0);
        assert!((pp - 24.0 / 7.0).abs() < 1e-12);
    }

    #[test]
    fn conditional_distributions_sum_to_one() {
        let lm = OracleLm::train(&["a b c", "c b a", "a c"], 3);
        for ctx in [
            vec![],
            vec!["<s>"],
            vec!["a"],
            vec!["<unk>"],
            vec!["<s>", "a"],
            vec!["b", "c"],
            vec!["x", "y"],
        ] {
            let mut sum = lm.prob(&ctx, "<unk>");
            sum += lm.prob(&ctx, "</s>");
            for w in ["a", "b", "c"] {
                sum += lm.prob(&ctx, w);
            }
            assert!(
                (sum - 1.0).abs() < 1e-12,
                "context {ctx:?} sums to {sum}",
            );
        }
    }
}

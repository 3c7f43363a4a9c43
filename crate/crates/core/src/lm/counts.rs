//! Raw and continuation count tables gathered from the training stream.

use rustc_hash::FxHashMap;
use smallvec::SmallVec;

use super::vocab::{TokenId, BOS, EOS};

type Gram = Box<[TokenId]>;

/// Count tables for one training run.
///
/// `raw[k-1]` counts every k-token window over `<s> tokens </s>` padded
/// lines, except the bare `<s>` unigram (it is context, never an outcome).
/// After [`finish`](TrainingCounts::finish), `continuation[k-1]` holds the
/// number of distinct single-token left extensions of each k-gram, the
/// Kneser-Ney substitute for raw counts below the top order.
#[derive(Debug)]
pub struct TrainingCounts {
    order: usize,
    raw: Vec<FxHashMap<Gram, u64>>,
    continuation: Vec<FxHashMap<Gram, u64>>,
    lines: u64,
    nonempty_lines: u64,
    finished: bool,
}

impl TrainingCounts {
    pub fn new(order: usize) -> TrainingCounts {
        assert!(order >= 1, "order must be at least 1");
        TrainingCounts {
            order,
            raw: vec![FxHashMap::default(); order],
            continuation: vec![FxHashMap::default(); order],
            lines: 0,
            nonempty_lines: 0,
            finished: false,
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn lines(&self) -> u64 {
        self.lines
    }

    pub fn nonempty_lines(&self) -> u64 {
        self.nonempty_lines
    }

    /// Count all n-gram windows of one tokenized line (ids without padding).
    pub fn add_line(&mut self, ids: &[TokenId]) {
        debug_assert!(!self.finished);
        self.lines += 1;
        if !ids.is_empty() {
            self.nonempty_lines += 1;
        }
        let mut padded: SmallVec<[TokenId; 64]> = SmallVec::with_capacity(ids.len() + 2);
        padded.push(BOS);
        padded.extend_from_slice(ids);
        padded.push(EOS);
        for k in 1..=self.order {
            let table = &mut self.raw[k - 1];
            for win in padded.windows(k) {
                if k == 1 && win[0] == BOS {
                    continue;
                }
                // get_mut first: allocate the boxed key only on first sight.
                if let Some(n) = table.get_mut(win) {
                    *n += 1;
                } else {
                    table.insert(win.into(), 1);
                }
            }
        }
    }

    /// Derive continuation counts from the raw tables. Must be called once
    /// after the last line and before any adjusted-count lookup.
    pub fn finish(&mut self) {
        for k in 1..self.order {
            let mut cont: FxHashMap<Gram, u64> = FxHashMap::default();
            for gram in self.raw[k].keys() {
                let suffix = &gram[1..];
                if let Some(n) = cont.get_mut(suffix) {
                    *n += 1;
                } else {
                    cont.insert(suffix.into(), 1);
                }
            }
            self.continuation[k - 1] = cont;
        }
        self.finished = true;
    }

    pub fn raw_count(&self, gram: &[TokenId]) -> u64 {
        self.raw[gram.len() - 1].get(gram).copied().unwrap_or(0)
    }

    /// Adjusted count: raw at the top order and for `<s>`-initial grams
    /// (those can never be continued from the left), continuation count
    /// otherwise. A gram has a positive adjusted count exactly when its raw
    /// count is positive, so the raw tables enumerate the support.
    pub fn adjusted(&self, gram: &[TokenId]) -> u64 {
        debug_assert!(self.finished);
        let k = gram.len();
        if k == self.order || gram[0] == BOS {
            return self.raw_count(gram);
        }
        self.continuation[k - 1].get(gram).copied().unwrap_or(0)
    }

    /// Iterate the stored k-grams (the support of both raw and adjusted
    /// counts at order k) in unspecified order.
    pub fn grams(&self, k: usize) -> impl Iterator<Item = &[TokenId]> {
        self.raw[k - 1].keys().map(|g| g.as_ref())
    }

    pub fn table_len(&self, k: usize) -> usize {
        self.raw[k - 1].len()
    }

    /// Absolute discount for order k from counts-of-counts of the adjusted
    /// counts: n1/(n1 + 2*n2), falling back to 0.5 when n1 is zero and
    /// clamped to [0, 0.999].
    pub fn discount(&self, k: usize) -> f64 {
        debug_assert!(self.finished);
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
}

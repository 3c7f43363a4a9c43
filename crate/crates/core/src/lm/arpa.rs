//! Reading and writing models in the textual ARPA format.
//!
//! Layout: a `\data\` header with per-order counts, one `\k-grams:` section
//! per order listing `log10_prob <tokens> [log10_backoff]` (the backoff
//! column is absent at the top order), and a closing `\end\`. Floats are
//! written with 17 significant digits so a save/load round trip reproduces
//! every entry bit for bit.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use thiserror::Error;

use super::model::{NGramEntry, NGramModel};
use super::vocab::{TokenId, Vocabulary, BOS_TOKEN, EOS_TOKEN, UNK_TOKEN};

#[derive(Debug, Error)]
pub enum ArpaError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("{0}")]
    Format(String),
}

fn parse_err(line: usize, message: impl Into<String>) -> ArpaError {
    ArpaError::Parse {
        line,
        message: message.into(),
    }
}

/// Write `model` as ARPA text. Grams are emitted in token-id order, which
/// makes the output deterministic and keeps ids stable across a round trip.
pub fn write_model<W: Write>(model: &NGramModel, mut w: W) -> io::Result<()> {
    writeln!(w, "\\data\\")?;
    for k in 1..=model.order() {
        writeln!(w, "ngram {}={}", k, model.table_len(k))?;
    }
    for k in 1..=model.order() {
        writeln!(w)?;
        writeln!(w, "\\{k}-grams:")?;
        let mut grams: Vec<(&[TokenId], &NGramEntry)> = model.grams(k).collect();
        grams.sort_unstable_by(|a, b| a.0.cmp(b.0));
        let mut text = String::new();
        for (gram, entry) in grams {
            text.clear();
            for (i, &id) in gram.iter().enumerate() {
                if i > 0 {
                    text.push(' ');
                }
                text.push_str(model.vocab().token(id));
            }
            if k < model.order() {
                writeln!(w, "{:.16e}\t{}\t{:.16e}", entry.log10_prob, text, entry.log10_backoff)?;
            } else {
                writeln!(w, "{:.16e}\t{}", entry.log10_prob, text)?;
            }
        }
    }
    writeln!(w)?;
    writeln!(w, "\\end\\")?;
    Ok(())
}

pub fn save_model(model: &NGramModel, path: impl AsRef<Path>) -> Result<(), ArpaError> {
    let file = File::create(path)?;
    let mut w = BufWriter::new(file);
    write_model(model, &mut w)?;
    w.flush()?;
    Ok(())
}

/// Parse ARPA text into a model, enforcing the invariants queries rely on:
/// contiguous orders, section counts matching the header, known tokens,
/// finite non-positive probabilities, the three sentinel tokens, and the
/// suffix closure of stored grams.
pub fn read_model<R: BufRead>(reader: R) -> Result<NGramModel, ArpaError> {
    let mut lines = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if !trimmed.is_empty() {
            lines.push((idx + 1, trimmed.to_string()));
        }
    }
    let mut pos = 0;
    // Anything before \data\ (comments, stats) is ignored.
    while pos < lines.len() && lines[pos].1 != "\\data\\" {
        pos += 1;
    }
    if pos == lines.len() {
        return Err(ArpaError::Format("missing \\data\\ header".into()));
    }
    pos += 1;

    let mut counts: Vec<usize> = Vec::new();
    while pos < lines.len() {
        let (lineno, text) = &lines[pos];
        let Some(rest) = text.strip_prefix("ngram ") else {
            break;
        };
        let (k_str, n_str) = rest
            .split_once('=')
            .ok_or_else(|| parse_err(*lineno, format!("malformed count line `{text}`")))?;
        let k: usize = k_str
            .trim()
            .parse()
            .map_err(|_| parse_err(*lineno, format!("bad order in `{text}`")))?;
        let n: usize = n_str
            .trim()
            .parse()
            .map_err(|_| parse_err(*lineno, format!("bad count in `{text}`")))?;
        if k != counts.len() + 1 {
            return Err(parse_err(
                *lineno,
                format!("orders must be contiguous from 1, got {k}"),
            ));
        }
        counts.push(n);
        pos += 1;
    }
    if counts.is_empty() {
        return Err(ArpaError::Format("header declares no n-gram orders".into()));
    }
    let order = counts.len();

    let mut vocab = Vocabulary::new();
    let mut model: Option<NGramModel> = None;
    let mut pending: Vec<Vec<(Box<[TokenId]>, NGramEntry)>> = vec![Vec::new(); order];

    for (k, &expected) in counts.iter().enumerate().map(|(i, n)| (i + 1, n)) {
        let header = format!("\\{k}-grams:");
        let (lineno, text) = lines
            .get(pos)
            .ok_or_else(|| ArpaError::Format(format!("missing section {header}")))?;
        if *text != header {
            return Err(parse_err(*lineno, format!("expected `{header}`, got `{text}`")));
        }
        pos += 1;
        let section = &mut pending[k - 1];
        section.reserve(expected);
        while pos < lines.len() && !lines[pos].1.starts_with('\\') {
            let (lineno, text) = &lines[pos];
            let fields: Vec<&str> = text.split_whitespace().collect();
            let has_backoff = match fields.len() {
                n if n == k + 1 => false,
                n if n == k + 2 => true,
                _ => {
                    return Err(parse_err(
                        *lineno,
                        format!("expected {} or {} fields for a {k}-gram, got {}", k + 1, k + 2, fields.len()),
                    ))
                }
            };
            let log10_prob: f64 = fields[0]
                .parse()
                .map_err(|_| parse_err(*lineno, format!("bad probability `{}`", fields[0])))?;
            if !log10_prob.is_finite() || log10_prob > 0.0 {
                return Err(parse_err(
                    *lineno,
                    format!("log10 probability must be finite and <= 0, got {log10_prob}"),
                ));
            }
            let log10_backoff: f64 = if has_backoff {
                let raw = fields[k + 1];
                let b: f64 = raw
                    .parse()
                    .map_err(|_| parse_err(*lineno, format!("bad backoff `{raw}`")))?;
                if !b.is_finite() {
                    return Err(parse_err(*lineno, format!("backoff must be finite, got {b}")));
                }
                b
            } else {
                0.0
            };
            let gram: Box<[TokenId]> = if k == 1 {
                Box::new([vocab.intern(fields[1])])
            } else {
                let mut ids = Vec::with_capacity(k);
                for tok in &fields[1..=k] {
                    let id = vocab.id(tok).ok_or_else(|| {
                        parse_err(*lineno, format!("token `{tok}` has no unigram entry"))
                    })?;
                    ids.push(id);
                }
                ids.into_boxed_slice()
            };
            section.push((
                gram,
                NGramEntry {
                    log10_prob,
                    log10_backoff,
                },
            ));
            pos += 1;
        }
        if section.len() != expected {
            return Err(ArpaError::Format(format!(
                "header declares {expected} {k}-grams but section has {}",
                section.len()
            )));
        }
        if k == 1 {
            for tok in [UNK_TOKEN, BOS_TOKEN, EOS_TOKEN] {
                let id = vocab.id(tok).expect("sentinels are pre-seeded");
                if !section.iter().any(|(g, _)| g.as_ref() == [id]) {
                    return Err(ArpaError::Format(format!("missing `{tok}` unigram")));
                }
            }
            if vocab.len() != expected {
                return Err(ArpaError::Format(
                    "duplicate tokens in the unigram section".into(),
                ));
            }
            model = Some(NGramModel::new(order, vocab.clone()));
        }
    }

    let (lineno, text) = lines
        .get(pos)
        .ok_or_else(|| ArpaError::Format("missing \\end\\".into()))?;
    if *text != "\\end\\" {
        return Err(parse_err(*lineno, format!("expected `\\end\\`, got `{text}`")));
    }

    let mut model = model.expect("unigram section always builds the model");
    for section in &pending {
        for (gram, entry) in section {
            if model.entry(gram).is_some() {
                return Err(ArpaError::Format(format!(
                    "duplicate {}-gram entry",
                    gram.len()
                )));
            }
            model.insert(gram, *entry);
        }
    }
    for k in 2..=order {
        for (gram, _) in model.grams(k) {
            if model.entry(&gram[1..]).is_none() {
                return Err(ArpaError::Format(format!(
                    "{k}-gram lacks its ({})-gram suffix: stored grams must be suffix-closed",
                    k - 1
                )));
            }
        }
    }
    Ok(model)
}

pub fn load_model(path: impl AsRef<Path>) -> Result<NGramModel, ArpaError> {
    let file = File::open(path)?;
    read_model(BufReader::new(file))
}

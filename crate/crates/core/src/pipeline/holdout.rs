//! Deterministic holdout split of a kept corpus.
//!
//! Selection is by keyed hash: every document id is hashed under the
//! "holdout" domain and the `holdout_count` smallest hashes form the
//! holdout set. The same (seed, ids) therefore always select the same
//! documents, independent of sharding or processing order.

use std::collections::BinaryHeap;
use std::fs;
use std::io::BufRead;
use std::path::{Path, PathBuf};

use rustc_hash::FxHashSet;

use crate::sampling::keyed_hash;

use super::ingest::open_text_reader;
use super::run::ShardWriter;
use super::{io_err, PipelineError};

/// Tracks the k smallest (hash, ordinal) pairs seen so far; ordinals are
/// positions in the kept stream, which pins records without re-deriving ids.
pub(crate) struct SmallestK {
    k: usize,
    heap: BinaryHeap<(u64, u64)>,
}

impl SmallestK {
    pub(crate) fn new(k: usize) -> SmallestK {
        SmallestK {
            k,
            heap: BinaryHeap::with_capacity(k + 1),
        }
    }

    pub(crate) fn offer(&mut self, hash: u64, ordinal: u64) {
        if self.k == 0 {
            return;
        }
        if self.heap.len() < self.k {
            self.heap.push((hash, ordinal));
        } else if let Some(&top) = self.heap.peek() {
            if (hash, ordinal) < top {
                self.heap.pop();
                self.heap.push((hash, ordinal));
            }
        }
    }

    pub(crate) fn into_ordinals(self) -> FxHashSet<u64> {
        self.heap.into_iter().map(|(_, ord)| ord).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HoldoutReport {
    /// Documents in the input kept corpus.
    pub total: u64,
    pub holdout_written: u64,
    pub train_written: u64,
    pub train_files: Vec<PathBuf>,
    pub holdout_file: PathBuf,
}

/// Derive the id of a kept-shard record the same way ingestion does:
/// an explicit `id` field, else `<shard-basename>:<line-index>`.
fn record_id(raw: &str, basename: &str, index: u64) -> String {
    if let Ok(value) = serde_json::from_str::<serde_json::Value>(raw) {
        if let Some(id) = value.get("id").and_then(|v| v.as_str()) {
            return id.to_string();
        }
    }
    format!("{basename}:{index}")
}

/// Split a kept corpus (a list of JSON-lines shards) into train shards and
/// one holdout shard, both under `out_dir`. Train shards are named
/// `<train_prefix>NNNNN.jsonl.gz`; the holdout is `holdout.jsonl.gz`.
/// Two passes: select the holdout ordinals, then copy records out.
pub fn split_holdout(
    kept_files: &[PathBuf],
    holdout_count: u64,
    seed: u64,
    out_dir: &Path,
    train_prefix: &str,
    shard_size: usize,
) -> Result<HoldoutReport, PipelineError> {
    if shard_size == 0 {
        return Err(PipelineError::Config("shard_size must be positive".into()));
    }
    fs::create_dir_all(out_dir).map_err(|e| io_err(out_dir, e))?;

    let mut smallest = SmallestK::new(holdout_count as usize);
    let mut total = 0u64;
    for_each_record(kept_files, |basename, index, raw, ordinal| {
        let id = record_id(raw, basename, index);
        smallest.offer(keyed_hash(seed, "holdout", &id), ordinal);
        total += 1;
        Ok(())
    })?;
    if holdout_count > total {
        return Err(PipelineError::HoldoutTooLarge {
            requested: holdout_count,
            available: total,
        });
    }
    let selected = smallest.into_ordinals();
    split_by_ordinals(kept_files, &selected, total, out_dir, train_prefix, shard_size)
}

/// Copy records into train shards plus the holdout shard, membership decided
/// by kept-stream ordinal. Shared by the standalone split and the pipeline
/// run (which selects ordinals during its main pass).
pub(crate) fn split_by_ordinals(
    kept_files: &[PathBuf],
    holdout: &FxHashSet<u64>,
    total: u64,
    out_dir: &Path,
    train_prefix: &str,
    shard_size: usize,
) -> Result<HoldoutReport, PipelineError> {
    let holdout_path = out_dir.join("holdout.jsonl.gz");
    let mut holdout_writer = ShardWriter::single(&holdout_path)?;
    let mut train_writer = ShardWriter::new(out_dir, train_prefix, shard_size);
    for_each_record(kept_files, |_basename, _index, raw, ordinal| {
        if holdout.contains(&ordinal) {
            holdout_writer.write_record(raw)
        } else {
            train_writer.write_record(raw)
        }
    })?;
    let holdout_written = holdout_writer.total();
    holdout_writer.finish_single()?;
    let (train_files, train_written) = train_writer.finish()?;
    debug_assert_eq!(holdout_written + train_written, total);
    Ok(HoldoutReport {
        total,
        holdout_written,
        train_written,
        train_files,
        holdout_file: holdout_path,
    })
}

/// Stream every record of the shard list in order, tracking the global
/// ordinal. The callback's errors abort the walk.
fn for_each_record<F>(files: &[PathBuf], mut f: F) -> Result<(), PipelineError>
where
    F: FnMut(&str, u64, &str, u64) -> Result<(), PipelineError>,
{
    let mut ordinal = 0u64;
    for path in files {
        let basename = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        let mut reader = open_text_reader(path)?;
        let mut buf = String::new();
        let mut index = 0u64;
        loop {
            buf.clear();
            let n = reader.read_line(&mut buf).map_err(|e| io_err(path, e))?;
            if n == 0 {
                break;
            }
            let raw = buf.trim_end_matches(['\n', '\r']);
            if raw.is_empty() {
                continue;
            }
            f(&basename, index, raw, ordinal)?;
            index += 1;
            ordinal += 1;
        }
    }
    Ok(())
}

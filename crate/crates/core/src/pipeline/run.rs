//! The single-pass sampling run: score, decide, shard.
//!
//! One streaming scan over the ingested documents produces every output:
//! kept shards, the sidecar of all scores, the run report with distribution
//! summaries, and the histogram artifacts. Memory stays bounded by the
//! model, two reservoirs, and one shard buffer regardless of corpus size.
//! If the run dies partway (output I/O failure, blown error budget), the
//! partial outputs are described in a `MANIFEST.partial.json` so nothing
//! half-written gets mistaken for a finished run.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use flate2::write::GzEncoder;
use flate2::Compression;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::lm::{load_model, NGramModel};
use crate::perplexity::{document_perplexity, PerplexityRecord, ScoreError};
use crate::sampling::{keyed_hash, summarize_reservoir, Reservoir, HISTOGRAM_BINS};

use super::holdout::{split_by_ordinals, SmallestK};
use super::ingest::{expand_inputs, DocumentReader, IngestedRecord, RecordError, RecordErrorKind};
use super::stats::emit_stats;
use super::{io_err, PipelineError, RunConfig, RunReport};

/// Documents scored per parallel batch.
const CHUNK: usize = 1024;

/// Don't enforce the error budget mid-stream until this many documents have
/// been seen; a final exact check still applies to shorter streams.
const BUDGET_WARMUP: u64 = 10_000;

/// One sidecar line: the score and the sampling outcome for a document.
/// Every successfully scored document gets exactly one, kept or not.
///
/// `pp` is the linear perplexity and serializes as `null` in the rare case
/// it overflowed `f64`; `log10_pp` is always finite and is the value to
/// trust programmatically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SidecarRecord {
    pub id: String,
    pub pp: f64,
    pub log10_pp: f64,
    pub lines: u64,
    pub tokens: u64,
    pub kept: bool,
}

/// Gzipped JSON-lines writer that rotates shards every `shard_size`
/// records. Shards are created lazily (an empty run leaves no files) and
/// named `<prefix>NNNNN.jsonl.gz`. The `single` constructor pins the writer
/// to one eagerly created file instead, for outputs that must exist even
/// when empty.
pub(crate) struct ShardWriter {
    out_dir: PathBuf,
    prefix: String,
    shard_size: usize,
    fixed: Option<PathBuf>,
    current: Option<GzEncoder<BufWriter<File>>>,
    in_shard: usize,
    shard_index: usize,
    files: Vec<PathBuf>,
    total: u64,
}

impl ShardWriter {
    pub(crate) fn new(out_dir: &Path, prefix: &str, shard_size: usize) -> ShardWriter {
        debug_assert!(shard_size > 0);
        ShardWriter {
            out_dir: out_dir.to_path_buf(),
            prefix: prefix.to_string(),
            shard_size,
            fixed: None,
            current: None,
            in_shard: 0,
            shard_index: 0,
            files: Vec::new(),
            total: 0,
        }
    }

    pub(crate) fn single(path: &Path) -> Result<ShardWriter, PipelineError> {
        let mut writer = ShardWriter {
            out_dir: PathBuf::new(),
            prefix: String::new(),
            shard_size: usize::MAX,
            fixed: Some(path.to_path_buf()),
            current: None,
            in_shard: 0,
            shard_index: 0,
            files: Vec::new(),
            total: 0,
        };
        writer.open_shard()?;
        Ok(writer)
    }

    fn open_shard(&mut self) -> Result<(), PipelineError> {
        let path = match &self.fixed {
            Some(p) => p.clone(),
            None => {
                let p = self
                    .out_dir
                    .join(format!("{}{:05}.jsonl.gz", self.prefix, self.shard_index));
                self.shard_index += 1;
                p
            }
        };
        let file = File::create(&path).map_err(|e| io_err(&path, e))?;
        self.current = Some(GzEncoder::new(
            BufWriter::with_capacity(64 * 1024, file),
            Compression::fast(),
        ));
        self.files.push(path);
        self.in_shard = 0;
        Ok(())
    }

    fn close_current(&mut self) -> Result<(), PipelineError> {
        if let Some(enc) = self.current.take() {
            let path = self.files.last().expect("open shard has a recorded path");
            let mut inner = enc.finish().map_err(|e| io_err(path, e))?;
            inner.flush().map_err(|e| io_err(path, e))?;
        }
        Ok(())
    }

    pub(crate) fn write_record(&mut self, raw: &str) -> Result<(), PipelineError> {
        if self.current.is_none() {
            self.open_shard()?;
        } else if self.fixed.is_none() && self.in_shard == self.shard_size {
            self.close_current()?;
            self.open_shard()?;
        }
        let enc = self.current.as_mut().expect("shard is open");
        let path = self.files.last().expect("open shard has a recorded path");
        enc.write_all(raw.as_bytes())
            .and_then(|_| enc.write_all(b"\n"))
            .map_err(|e| io_err(path, e))?;
        self.in_shard += 1;
        self.total += 1;
        Ok(())
    }

    pub(crate) fn total(&self) -> u64 {
        self.total
    }

    pub(crate) fn finish(mut self) -> Result<(Vec<PathBuf>, u64), PipelineError> {
        self.close_current()?;
        Ok((self.files, self.total))
    }

    pub(crate) fn finish_single(self) -> Result<(), PipelineError> {
        self.finish().map(|_| ())
    }
}

/// Run the full pipeline from a config: load the model, expand the inputs,
/// and stream every document through score → weight → keep/drop.
pub fn run_sampling(config: &RunConfig) -> Result<RunReport, PipelineError> {
    config.validate()?;
    let start = Instant::now();
    let model = load_model(&config.model_path)?;
    let files = expand_inputs(&config.input_paths)?;
    let docs = DocumentReader::new(files, &config.text_field);
    run_from(docs, &model, config, start)
}

/// The same run over an arbitrary document stream, for callers that already
/// hold a model and records (tests, embedding). Identical output contract
/// to [`run_sampling`].
pub fn run_with_documents<I>(
    docs: I,
    model: &NGramModel,
    config: &RunConfig,
) -> Result<RunReport, PipelineError>
where
    I: IntoIterator<Item = Result<IngestedRecord, RecordError>>,
{
    run_from(docs, model, config, Instant::now())
}

fn run_from<I>(
    docs: I,
    model: &NGramModel,
    config: &RunConfig,
    start: Instant,
) -> Result<RunReport, PipelineError>
where
    I: IntoIterator<Item = Result<IngestedRecord, RecordError>>,
{
    config.validate()?;
    fs::create_dir_all(&config.output_dir).map_err(|e| io_err(&config.output_dir, e))?;
    let manifest = config.output_dir.join("MANIFEST.partial.json");
    if manifest.exists() {
        fs::remove_file(&manifest).map_err(|e| io_err(&manifest, e))?;
    }
    match run_inner(docs, model, config, start) {
        Ok(report) => Ok(report),
        Err(err) => {
            write_partial_manifest(&config.output_dir, &err);
            Err(err)
        }
    }
}

fn run_inner<I>(
    docs: I,
    model: &NGramModel,
    config: &RunConfig,
    start: Instant,
) -> Result<RunReport, PipelineError>
where
    I: IntoIterator<Item = Result<IngestedRecord, RecordError>>,
{
    let out_dir = &config.output_dir;
    let seed = config.sampler.seed;
    let pool = if config.threads > 0 {
        Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(config.threads)
                .build()
                .map_err(|e| PipelineError::Config(format!("thread pool: {e}")))?,
        )
    } else {
        None
    };

    let scores_path = out_dir.join("scores.jsonl");
    let scores_file = File::create(&scores_path).map_err(|e| io_err(&scores_path, e))?;
    let mut scores = BufWriter::with_capacity(64 * 1024, scores_file);
    let mut kept_writer = ShardWriter::new(out_dir, "kept-", config.shard_size);

    let mut input_res = Reservoir::new(config.max_in_memory, keyed_hash(seed, "summary", "input"));
    let mut kept_res = Reservoir::new(config.max_in_memory, keyed_hash(seed, "summary", "kept"));
    let (mut input_min, mut input_max) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut kept_min, mut kept_max) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut smallest = SmallestK::new(config.holdout_count as usize);

    let mut seen = 0u64;
    let mut errored = 0u64;
    let over_budget =
        |seen: u64, errored: u64| errored as f64 > config.error_budget * seen as f64;

    let mut iter = docs.into_iter();
    let mut pending: Vec<IngestedRecord> = Vec::with_capacity(CHUNK);
    loop {
        pending.clear();
        while pending.len() < CHUNK {
            match iter.next() {
                Some(Ok(record)) => pending.push(record),
                Some(Err(err)) => {
                    if let RecordErrorKind::Io(message) = &err.kind {
                        return Err(PipelineError::Io {
                            path: PathBuf::from(&err.path),
                            source: io::Error::other(message.clone()),
                        });
                    }
                    seen += 1;
                    errored += 1;
                    log::warn!("skipping record: {err}");
                    if seen >= BUDGET_WARMUP && over_budget(seen, errored) {
                        return Err(PipelineError::ErrorBudget {
                            errored,
                            seen,
                            budget: config.error_budget,
                        });
                    }
                }
                None => break,
            }
        }
        if pending.is_empty() {
            break;
        }

        let score_chunk = |batch: &[IngestedRecord]| -> Vec<Result<PerplexityRecord, ScoreError>> {
            batch
                .par_iter()
                .map(|record| document_perplexity(model, &record.doc))
                .collect()
        };
        let scored = match &pool {
            Some(p) => p.install(|| score_chunk(&pending)),
            None => score_chunk(&pending),
        };

        for (record, result) in pending.iter().zip(scored) {
            seen += 1;
            let perp = match result {
                Ok(perp) => perp,
                Err(err) => {
                    errored += 1;
                    log::warn!("skipping document: {err}");
                    if seen >= BUDGET_WARMUP && over_budget(seen, errored) {
                        return Err(PipelineError::ErrorBudget {
                            errored,
                            seen,
                            budget: config.error_budget,
                        });
                    }
                    continue;
                }
            };
            let pp = perp.perplexity();
            let clamped = pp.min(f64::MAX);
            input_res.push(clamped);
            input_min = input_min.min(clamped);
            input_max = input_max.max(clamped);

            let (_weight, keep) = config.sampler.decide(pp, &perp.doc_id);
            let sidecar = SidecarRecord {
                id: perp.doc_id,
                pp,
                log10_pp: perp.log10_pp,
                lines: perp.line_count,
                tokens: perp.token_count,
                kept: keep,
            };
            let line = serde_json::to_string(&sidecar).expect("sidecar record serializes");
            scores
                .write_all(line.as_bytes())
                .and_then(|_| scores.write_all(b"\n"))
                .map_err(|e| io_err(&scores_path, e))?;

            if keep {
                smallest.offer(keyed_hash(seed, "holdout", &sidecar.id), kept_writer.total());
                kept_writer.write_record(&record.raw)?;
                kept_res.push(clamped);
                kept_min = kept_min.min(clamped);
                kept_max = kept_max.max(clamped);
            }
        }
    }

    if seen > 0 && over_budget(seen, errored) {
        return Err(PipelineError::ErrorBudget {
            errored,
            seen,
            budget: config.error_budget,
        });
    }
    scores.flush().map_err(|e| io_err(&scores_path, e))?;
    let (kept_files, docs_kept) = kept_writer.finish()?;

    if config.holdout_count > 0 {
        if config.holdout_count > docs_kept {
            return Err(PipelineError::HoldoutTooLarge {
                requested: config.holdout_count,
                available: docs_kept,
            });
        }
        let selected = smallest.into_ordinals();
        let split = split_by_ordinals(
            &kept_files,
            &selected,
            docs_kept,
            out_dir,
            "kept.tmp-",
            config.shard_size,
        )?;
        for path in &kept_files {
            fs::remove_file(path).map_err(|e| io_err(path, e))?;
        }
        for (i, tmp) in split.train_files.iter().enumerate() {
            let final_path = out_dir.join(format!("kept-{i:05}.jsonl.gz"));
            fs::rename(tmp, &final_path).map_err(|e| io_err(tmp, e))?;
        }
    }

    if seen > errored {
        emit_stats(&scores_path, HISTOGRAM_BINS, out_dir)?;
    }

    let report = RunReport {
        docs_seen: seen,
        docs_kept,
        docs_errored: errored,
        kept_fraction: if seen > errored {
            docs_kept as f64 / (seen - errored) as f64
        } else {
            0.0
        },
        input_summary: summarize_reservoir(&input_res, input_min, input_max),
        kept_summary: summarize_reservoir(&kept_res, kept_min, kept_max),
        wall_time: start.elapsed().as_secs_f64(),
        seed,
    };
    let report_path = out_dir.join("report.json");
    let body = serde_json::to_string_pretty(&report).expect("report serializes");
    fs::write(&report_path, body + "\n").map_err(|e| io_err(&report_path, e))?;
    Ok(report)
}

/// Best-effort description of a run that died partway: the error and the
/// output files that exist. Its presence marks the directory as incomplete.
fn write_partial_manifest(out_dir: &Path, err: &PipelineError) {
    let mut files: Vec<String> = match fs::read_dir(out_dir) {
        Ok(entries) => entries
            .filter_map(|e| e.ok())
            .map(|e| e.file_name().to_string_lossy().into_owned())
            .filter(|name| name != "MANIFEST.partial.json")
            .collect(),
        Err(e) => {
            log::error!("cannot list partial outputs in {}: {e}", out_dir.display());
            return;
        }
    };
    files.sort();
    let manifest = serde_json::json!({
        "complete": false,
        "error": err.to_string(),
        "files": files,
    });
    let body = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    if let Err(e) = fs::write(out_dir.join("MANIFEST.partial.json"), body + "\n") {
        log::error!("cannot write partial manifest: {e}");
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lm::train_model;
    use crate::perplexity::{DocSource, Document};
    use crate::sampling::SamplerSpec;
    use std::io::BufRead;

    fn read_lines(path: &Path) -> Vec<String> {
        let mut reader = super::super::ingest::open_text_reader(path).unwrap();
        let mut out = Vec::new();
        let mut buf = String::new();
        loop {
            buf.clear();
            if reader.read_line(&mut buf).unwrap() == 0 {
                break;
            }
            out.push(buf.trim_end().to_string());
        }
        out
    }

    #[test]
    fn shard_writer_rotates_and_names_shards() {
        let dir = tempfile::tempdir().unwrap();
        let mut w = ShardWriter::new(dir.path(), "kept-", 3);
        for i in 0..7 {
            w.write_record(&format!("r{i}")).unwrap();
        }
        let (files, total) = w.finish().unwrap();
        assert_eq!(total, 7);
        assert_eq!(
            files,
            vec![
                dir.path().join("kept-00000.jsonl.gz"),
                dir.path().join("kept-00001.jsonl.gz"),
                dir.path().join("kept-00002.jsonl.gz"),
            ]
        );
        assert_eq!(read_lines(&files[0]), vec!["r0", "r1", "r2"]);
        assert_eq!(read_lines(&files[2]), vec!["r6"]);
    }

    #[test]
    fn empty_writers_leave_no_shards_but_single_files_exist() {
        let dir = tempfile::tempdir().unwrap();
        let (files, total) = ShardWriter::new(dir.path(), "kept-", 10).finish().unwrap();
        assert!(files.is_empty());
        assert_eq!(total, 0);

        let single_path = dir.path().join("holdout.jsonl.gz");
        let w = ShardWriter::single(&single_path).unwrap();
        assert_eq!(w.total(), 0);
        w.finish_single().unwrap();
        assert!(single_path.exists());
        assert!(read_lines(&single_path).is_empty());
    }

    fn record(id: &str, text: &str) -> Result<IngestedRecord, RecordError> {
        let lines: Vec<String> = text.split('\n').map(str::to_string).collect();
        Ok(IngestedRecord {
            doc: Document::new(
                id,
                lines,
                DocSource {
                    path: "mem".into(),
                    record: 0,
                },
            ),
            raw: format!("{{\"id\":\"{id}\",\"text\":\"{}\"}}", text.replace('\n', "\\n")),
        })
    }

    fn test_model() -> NGramModel {
        train_model(["the cat sat", "the dog sat", "a cat ran"], 2).unwrap()
    }

    #[test]
    fn keep_everything_run_produces_all_outputs() {
        let dir = tempfile::tempdir().unwrap();
        let mut config = RunConfig::new(
            vec!["unused".into()],
            "unused.arpa",
            SamplerSpec::random(1.0, 7),
            dir.path().join("out"),
        );
        config.shard_size = 2;
        let docs = vec![
            record("d0", "the cat sat"),
            record("d1", "the dog sat\na cat ran"),
            record("d2", "totally unseen words"),
        ];
        let report = run_with_documents(docs, &test_model(), &config).unwrap();
        assert_eq!(report.docs_seen, 3);
        assert_eq!(report.docs_kept, 3);
        assert_eq!(report.docs_errored, 0);
        assert_eq!(report.kept_fraction, 1.0);
        let summary = report.input_summary.as_ref().unwrap();
        assert_eq!(summary.count, 3);

        let out = config.output_dir;
        let sidecar = read_lines(&out.join("scores.jsonl"));
        assert_eq!(sidecar.len(), 3);
        let first: SidecarRecord = serde_json::from_str(&sidecar[0]).unwrap();
        assert_eq!(first.id, "d0");
        assert!(first.kept);
        assert_eq!(first.lines, 1);
        assert_eq!(first.tokens, 3);
        assert_eq!(read_lines(&out.join("kept-00000.jsonl.gz")).len(), 2);
        assert_eq!(read_lines(&out.join("kept-00001.jsonl.gz")).len(), 1);
        assert!(out.join("report.json").exists());
        assert!(out.join("hist.csv").exists());
        assert!(out.join("hist.svg").exists());
        assert!(!out.join("MANIFEST.partial.json").exists());
    }

    #[test]
    fn fatal_stream_error_leaves_a_partial_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let config = RunConfig::new(
            vec!["unused".into()],
            "unused.arpa",
            SamplerSpec::random(1.0, 7),
            dir.path().join("out"),
        );
        let docs = vec![
            record("d0", "the cat sat"),
            Err(RecordError {
                path: "broken.jsonl".into(),
                line: 1,
                kind: RecordErrorKind::Io("disk on fire".into()),
            }),
        ];
        let err = run_with_documents(docs, &test_model(), &config).unwrap_err();
        assert!(matches!(err, PipelineError::Io { .. }));
        let manifest = config.output_dir.join("MANIFEST.partial.json");
        let body = std::fs::read_to_string(&manifest).unwrap();
        assert!(body.contains("\"complete\": false"));
        assert!(body.contains("disk on fire"));
    }

    #[test]
    fn error_budget_aborts_at_final_check() {
        let dir = tempfile::tempdir().unwrap();
        let config = RunConfig::new(
            vec!["unused".into()],
            "unused.arpa",
            SamplerSpec::random(1.0, 7),
            dir.path().join("out"),
        );
        let docs = vec![
            record("d0", "the cat sat"),
            Err(RecordError {
                path: "in.jsonl".into(),
                line: 2,
                kind: RecordErrorKind::MalformedJson("oops".into()),
            }),
        ];
        // One bad record out of two blows the default 1% budget.
        let err = run_with_documents(docs, &test_model(), &config).unwrap_err();
        assert!(matches!(
            err,
            PipelineError::ErrorBudget {
                errored: 1,
                seen: 2,
                ..
            }
        ));
    }
}

//! `ppx` — train perplexity language models, score document streams, and
//! subsample corpora by perplexity.
//!
//! Subcommands mirror the library's pipeline stages: `train-lm` builds an
//! ARPA model, `quartiles` estimates the corpus perplexity distribution,
//! `calibrate` solves a sampler for a target kept fraction, `sample` runs
//! the scoring + subsampling pipeline, and `score`, `stats`, `holdout`
//! cover ad-hoc scoring, histogram rendering, and train/holdout splitting.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error (malformed or
//! unsatisfiable inputs), 3 I/O error. Logs go to stderr; data goes to
//! files or stdout only.

use std::fs;
use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use ppx_core::lm::{
    load_model, save_model, train_model_with, ArpaError, NGramModel, TrainError, TrainOptions,
};
use ppx_core::perplexity::{document_perplexity, DocSource, Document};
use ppx_core::pipeline::{
    emit_stats, expand_inputs, open_text_reader, run_sampling, split_holdout, DocumentReader,
    PipelineError, RecordErrorKind, RunConfig,
};
use ppx_core::sampling::{
    calibrate, estimate_quartiles, keyed_unit, CalibratePolicy, CalibrationError,
    DistributionError, DistributionSummary, SamplerSpec, DEFAULT_GAUSSIAN_BETA, HISTOGRAM_BINS,
};

#[derive(Parser)]
#[command(
    name = "ppx",
    version,
    about = "Perplexity-based corpus scoring and subsampling"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a Kneser-Ney n-gram model and write it in ARPA format.
    TrainLm(TrainLmArgs),
    /// Score documents against a model, one JSON record per document.
    Score(ScoreArgs),
    /// Estimate the perplexity distribution of a corpus subsample.
    Quartiles(QuartilesArgs),
    /// Solve a sampler specification for a target kept fraction.
    Calibrate(CalibrateArgs),
    /// Score a corpus and keep documents by perplexity-weighted coin flips.
    Sample(SampleArgs),
    /// Render histogram CSV and SVG from a scores sidecar.
    Stats(StatsArgs),
    /// Split kept shards into disjoint train and holdout sets.
    Holdout(HoldoutArgs),
}

// ---------------------------------------------------------------------------
// Exit-code plumbing
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Code {
    Usage = 1,
    Data = 2,
    Io = 3,
}

#[derive(Debug)]
struct Failure {
    code: Code,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Failure {
        Failure {
            code: Code::Usage,
            message: message.into(),
        }
    }

    fn data(message: impl Into<String>) -> Failure {
        Failure {
            code: Code::Data,
            message: message.into(),
        }
    }

    fn io(message: impl Into<String>) -> Failure {
        Failure {
            code: Code::Io,
            message: message.into(),
        }
    }
}

type CliResult<T> = Result<T, Failure>;

fn model_error(e: ArpaError) -> Failure {
    match e {
        ArpaError::Io(e) => Failure::io(format!("model file: {e}")),
        other => Failure::data(format!("model file: {other}")),
    }
}

/// Map a pipeline error onto the exit-code contract. `Config` errors are
/// usage errors when they come from flag values and data errors when they
/// come from file contents, so the caller picks.
fn pipeline_error(e: PipelineError, config_code: Code) -> Failure {
    let code = match &e {
        PipelineError::Io { .. } | PipelineError::NoInputs { .. } => Code::Io,
        PipelineError::Pattern(_) => Code::Usage,
        PipelineError::Config(_) => config_code,
        PipelineError::Model(ArpaError::Io(_)) => Code::Io,
        _ => Code::Data,
    };
    Failure {
        code,
        message: e.to_string(),
    }
}

fn distribution_error(e: DistributionError) -> Failure {
    match e {
        DistributionError::ZeroCapacity => Failure::usage(e.to_string()),
        other => Failure::data(other.to_string()),
    }
}

fn read_io<T: std::fmt::Display>(path: &Path, e: T) -> Failure {
    Failure::io(format!("{}: {e}", path.display()))
}

/// Seed precedence: explicit flag, then the PPX_SEED environment variable,
/// then any file-supplied fallbacks, then the default.
fn resolve_seed(flag: Option<u64>, fallbacks: &[Option<u64>], default: u64) -> CliResult<u64> {
    if let Some(seed) = flag {
        return Ok(seed);
    }
    match std::env::var("PPX_SEED") {
        Ok(raw) => {
            return raw
                .parse()
                .map_err(|_| Failure::usage(format!("PPX_SEED must be an unsigned integer, got {raw:?}")));
        }
        Err(std::env::VarError::NotPresent) => {}
        Err(e) => return Err(Failure::usage(format!("PPX_SEED: {e}"))),
    }
    Ok(fallbacks.iter().flatten().next().copied().unwrap_or(default))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // --help and --version are successes; everything else is usage.
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::TrainLm(args) => run_train_lm(args),
        Command::Score(args) => run_score(args),
        Command::Quartiles(args) => run_quartiles(args),
        Command::Calibrate(args) => run_calibrate(args),
        Command::Sample(args) => run_sample(args),
        Command::Stats(args) => run_stats(args),
        Command::Holdout(args) => run_holdout(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code as u8)
        }
    }
}

// ---------------------------------------------------------------------------
// train-lm
// ---------------------------------------------------------------------------

#[derive(Args)]
struct TrainLmArgs {
    /// Training text (globs ok, .gz ok); one sentence per line.
    #[arg(long, required = true, num_args = 1..)]
    input: Vec<String>,
    /// Model order (the n in n-gram).
    #[arg(long)]
    order: usize,
    /// Replace tokens seen fewer than this many times with <unk>.
    #[arg(long, default_value_t = 0)]
    min_count: u64,
    /// Output ARPA path.
    #[arg(long)]
    out: PathBuf,
}

fn run_train_lm(args: TrainLmArgs) -> CliResult<()> {
    if args.order == 0 {
        return Err(Failure::usage("--order must be at least 1"));
    }
    let files = expand_inputs(&args.input).map_err(|e| pipeline_error(e, Code::Usage))?;
    let mut lines = Vec::new();
    for file in &files {
        let reader = open_text_reader(file).map_err(|e| pipeline_error(e, Code::Io))?;
        for line in reader.lines() {
            lines.push(line.map_err(|e| read_io(file, e))?);
        }
    }
    let options = TrainOptions {
        order: args.order,
        min_count: args.min_count,
    };
    let model = train_model_with(|| lines.iter().map(String::as_str), &options).map_err(|e| {
        match e {
            TrainError::InvalidOrder(_) => Failure::usage(e.to_string()),
            TrainError::EmptyCorpus => Failure::data(e.to_string()),
        }
    })?;
    save_model(&model, &args.out).map_err(model_error)?;
    println!("vocabulary: {} tokens", model.vocab().len());
    for k in 1..=model.order() {
        println!("{k}-grams: {}", model.table_len(k));
    }
    println!("wrote {}", args.out.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// score
// ---------------------------------------------------------------------------

#[derive(Args)]
struct ScoreArgs {
    /// ARPA model to score against.
    #[arg(long)]
    model: PathBuf,
    /// Input JSONL files (globs ok, .gz ok); omit to read stdin.
    #[arg(long, num_args = 1..)]
    input: Vec<String>,
    /// JSON field holding the document text.
    #[arg(long, default_value = "text")]
    text_field: String,
    /// Treat each line as one bare-text document instead of JSON.
    #[arg(long)]
    raw: bool,
    /// Output path (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(serde::Serialize)]
struct ScoredDoc<'a> {
    id: &'a str,
    pp: f64,
    log10_pp: f64,
    lines: u64,
    tokens: u64,
}

fn run_score(args: ScoreArgs) -> CliResult<()> {
    let model = load_model(&args.model).map_err(model_error)?;
    let mut out: Box<dyn Write> = match &args.out {
        Some(path) => Box::new(io::BufWriter::new(
            fs::File::create(path).map_err(|e| read_io(path, e))?,
        )),
        None => Box::new(io::BufWriter::new(io::stdout().lock())),
    };
    let mut scored = 0u64;
    let mut skipped = 0u64;
    if args.input.is_empty() {
        let stdin = io::stdin().lock();
        score_lines(&model, stdin, "stdin", &args, &mut out, &mut scored, &mut skipped)?;
    } else {
        let files = expand_inputs(&args.input).map_err(|e| pipeline_error(e, Code::Io))?;
        for file in &files {
            let reader = open_text_reader(file).map_err(|e| pipeline_error(e, Code::Io))?;
            let base = file
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_else(|| file.display().to_string());
            score_lines(&model, reader, &base, &args, &mut out, &mut scored, &mut skipped)?;
        }
    }
    out.flush().map_err(|e| Failure::io(e.to_string()))?;
    log::info!("scored {scored} documents, skipped {skipped}");
    Ok(())
}

fn score_lines(
    model: &NGramModel,
    reader: impl BufRead,
    source_name: &str,
    args: &ScoreArgs,
    out: &mut dyn Write,
    scored: &mut u64,
    skipped: &mut u64,
) -> CliResult<()> {
    for (index, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Failure::io(format!("{source_name}: {e}")))?;
        if line.trim().is_empty() {
            continue;
        }
        let source = DocSource {
            path: source_name.to_string(),
            record: index as u64,
        };
        let doc = if args.raw {
            Document::new(format!("{source_name}:{index}"), vec![line.clone()], source)
        } else {
            match parse_json_doc(&line, &args.text_field, source_name, index) {
                Ok(doc) => doc,
                Err(reason) => {
                    log::warn!("{source_name}:{index}: {reason}; skipping");
                    *skipped += 1;
                    continue;
                }
            }
        };
        match document_perplexity(model, &doc) {
            Ok(record) => {
                let row = ScoredDoc {
                    id: &record.doc_id,
                    pp: record.perplexity(),
                    log10_pp: record.log10_pp,
                    lines: record.line_count,
                    tokens: record.token_count,
                };
                let json = serde_json::to_string(&row)
                    .map_err(|e| Failure::data(format!("serializing record: {e}")))?;
                writeln!(out, "{json}").map_err(|e| Failure::io(e.to_string()))?;
                *scored += 1;
            }
            Err(e) => {
                log::warn!("{}: {e}; skipping", doc.id);
                *skipped += 1;
            }
        }
    }
    Ok(())
}

fn parse_json_doc(
    line: &str,
    text_field: &str,
    source_name: &str,
    index: usize,
) -> Result<Document, String> {
    let value: serde_json::Value =
        serde_json::from_str(line).map_err(|e| format!("malformed JSON ({e})"))?;
    let text = value
        .get(text_field)
        .and_then(|v| v.as_str())
        .ok_or_else(|| format!("missing text field {text_field:?}"))?;
    let id = value
        .get("id")
        .and_then(|v| v.as_str())
        .map(str::to_string)
        .unwrap_or_else(|| format!("{source_name}:{index}"));
    let lines = text.split('\n').map(str::to_string).collect();
    Ok(Document::new(
        id,
        lines,
        DocSource {
            path: source_name.to_string(),
            record: index as u64,
        },
    ))
}

// ---------------------------------------------------------------------------
// quartiles
// ---------------------------------------------------------------------------

#[derive(Args)]
struct QuartilesArgs {
    /// Input JSONL files (globs ok, .gz ok).
    #[arg(long, required = true, num_args = 1..)]
    input: Vec<String>,
    /// ARPA model to score against.
    #[arg(long)]
    model: PathBuf,
    /// Probability of scoring each document.
    #[arg(long, default_value_t = 0.1)]
    subsample: f64,
    /// JSON field holding the document text.
    #[arg(long, default_value = "text")]
    text_field: String,
    /// Seed for the subsample coin flips (fallback: PPX_SEED, then 0).
    #[arg(long)]
    seed: Option<u64>,
    /// Reservoir capacity for quantile estimation.
    #[arg(long, default_value_t = 100_000)]
    max_in_memory: usize,
    /// Output path for the distribution summary JSON.
    #[arg(long)]
    out: PathBuf,
}

/// Streams subsampled perplexities out of a document reader, stashing the
/// first fatal I/O error (the quantile estimator only sees plain f64s).
struct PpStream<'a> {
    reader: DocumentReader,
    model: &'a NGramModel,
    subsample: f64,
    seed: u64,
    fatal: &'a mut Option<Failure>,
    skipped: &'a mut u64,
}

impl Iterator for PpStream<'_> {
    type Item = f64;

    fn next(&mut self) -> Option<f64> {
        loop {
            let record = match self.reader.next()? {
                Ok(record) => record,
                Err(e) if matches!(e.kind, RecordErrorKind::Io(_)) => {
                    *self.fatal = Some(Failure::io(e.to_string()));
                    return None;
                }
                Err(e) => {
                    log::warn!("{e}; skipping");
                    *self.skipped += 1;
                    continue;
                }
            };
            if keyed_unit(self.seed, "quartiles", &record.doc.id) >= self.subsample {
                continue;
            }
            match document_perplexity(self.model, &record.doc) {
                Ok(record) => return Some(record.perplexity()),
                Err(e) => {
                    log::warn!("{e}; skipping");
                    *self.skipped += 1;
                }
            }
        }
    }
}

fn run_quartiles(args: QuartilesArgs) -> CliResult<()> {
    if !(args.subsample > 0.0 && args.subsample <= 1.0) {
        return Err(Failure::usage(format!(
            "--subsample must be in (0, 1], got {}",
            args.subsample
        )));
    }
    if args.max_in_memory == 0 {
        return Err(Failure::usage("--max-in-memory must be at least 1"));
    }
    let seed = resolve_seed(args.seed, &[], 0)?;
    let model = load_model(&args.model).map_err(model_error)?;
    let files = expand_inputs(&args.input).map_err(|e| pipeline_error(e, Code::Io))?;
    let mut fatal = None;
    let mut skipped = 0u64;
    let stream = PpStream {
        reader: DocumentReader::new(files, &args.text_field),
        model: &model,
        subsample: args.subsample,
        seed,
        fatal: &mut fatal,
        skipped: &mut skipped,
    };
    let summary = estimate_quartiles(stream, args.max_in_memory);
    if let Some(failure) = fatal {
        return Err(failure);
    }
    let summary = summary.map_err(|e| match e {
        DistributionError::EmptyStream => Failure::data(format!(
            "no documents selected at subsample rate {}",
            args.subsample
        )),
        other => distribution_error(other),
    })?;
    let json = serde_json::to_string_pretty(&summary)
        .map_err(|e| Failure::data(format!("serializing summary: {e}")))?;
    fs::write(&args.out, json + "\n").map_err(|e| read_io(&args.out, e))?;
    if skipped > 0 {
        log::warn!("skipped {skipped} unreadable documents");
    }
    let (q1, q2, q3) = summary.quartiles();
    println!(
        "scored {} documents: q1={q1:.6e} q2={q2:.6e} q3={q3:.6e} → {}",
        summary.count,
        args.out.display()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// calibrate
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, ValueEnum)]
enum PolicyArg {
    /// Uniform coin flip; rate equals the target fraction.
    Random,
    /// Four-region stepwise weights over the quartiles.
    Stepwise,
    /// Gaussian weights centered on the median.
    Gaussian,
}

#[derive(Args)]
struct CalibrateArgs {
    /// Distribution summary JSON from `ppx quartiles`.
    #[arg(long)]
    summary: PathBuf,
    /// Fraction of documents the sampler should keep in expectation.
    #[arg(long)]
    target_fraction: f64,
    /// Sampler family to calibrate.
    #[arg(long, value_enum)]
    policy: PolicyArg,
    /// Gaussian spread β (ignored for other policies).
    #[arg(long, default_value_t = DEFAULT_GAUSSIAN_BETA)]
    beta: f64,
    /// Optional scores sidecar for an exact perplexity sample
    /// (default: the summary's histogram midpoints).
    #[arg(long)]
    scores: Option<PathBuf>,
    /// Seed stored in the resulting sampler (fallback: PPX_SEED, then 0).
    #[arg(long)]
    seed: Option<u64>,
    /// Output path for the sampler spec JSON.
    #[arg(long)]
    out: PathBuf,
}

/// An approximate perplexity sample from a summary's histogram: each bin
/// contributes its geometric midpoint once per document counted in it.
fn sample_from_bins(summary: &DistributionSummary) -> Vec<f64> {
    let mut sample = Vec::new();
    for bin in &summary.bins {
        let mid = (bin.lo * bin.hi).sqrt();
        sample.extend(std::iter::repeat_n(mid, bin.n as usize));
    }
    sample
}

fn sample_from_scores(path: &Path) -> CliResult<Vec<f64>> {
    #[derive(Deserialize)]
    struct Row {
        log10_pp: f64,
    }
    let reader = open_text_reader(path).map_err(|e| pipeline_error(e, Code::Io))?;
    let mut sample = Vec::new();
    for (index, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| read_io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let row: Row = serde_json::from_str(&line).map_err(|e| {
            Failure::data(format!("{}:{}: not a scores record: {e}", path.display(), index + 1))
        })?;
        sample.push(10f64.powf(row.log10_pp));
    }
    Ok(sample)
}

fn run_calibrate(args: CalibrateArgs) -> CliResult<()> {
    if !(args.target_fraction > 0.0 && args.target_fraction < 1.0) {
        return Err(Failure::usage(format!(
            "--target-fraction must be in (0, 1), got {}",
            args.target_fraction
        )));
    }
    let raw = fs::read_to_string(&args.summary).map_err(|e| read_io(&args.summary, e))?;
    let summary: DistributionSummary = serde_json::from_str(&raw)
        .map_err(|e| Failure::data(format!("{}: {e}", args.summary.display())))?;
    let sample = match &args.scores {
        Some(path) => sample_from_scores(path)?,
        None => sample_from_bins(&summary),
    };
    let policy = match args.policy {
        PolicyArg::Random => CalibratePolicy::Random,
        PolicyArg::Stepwise => CalibratePolicy::Stepwise,
        PolicyArg::Gaussian => CalibratePolicy::Gaussian { beta: args.beta },
    };
    let seed = resolve_seed(args.seed, &[], 0)?;
    let spec = calibrate(&sample, args.target_fraction, policy, &summary, seed).map_err(|e| {
        match e {
            CalibrationError::BadTarget(_) => Failure::usage(e.to_string()),
            other => Failure::data(other.to_string()),
        }
    })?;
    let json = serde_json::to_string_pretty(&spec)
        .map_err(|e| Failure::data(format!("serializing sampler: {e}")))?;
    fs::write(&args.out, json + "\n").map_err(|e| read_io(&args.out, e))?;
    let expected: f64 = sample.iter().map(|&pp| spec.weight(pp)).sum::<f64>() / sample.len() as f64;
    println!(
        "expected kept fraction {expected:.6} (target {}) → {}",
        args.target_fraction,
        args.out.display()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// sample
// ---------------------------------------------------------------------------

#[derive(Args)]
struct SampleArgs {
    /// Optional TOML file supplying defaults for the flags below (flags win).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Input JSONL files (globs ok, .gz ok).
    #[arg(long, num_args = 1..)]
    input: Vec<String>,
    /// ARPA model to score against.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Sampler spec JSON from `ppx calibrate`.
    #[arg(long)]
    sampler: Option<PathBuf>,
    /// Directory for kept shards, sidecar, report, and histograms.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Seed override (precedence: this flag, PPX_SEED, config file,
    /// the sampler spec's own seed).
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// JSON field holding the document text.
    #[arg(long)]
    text_field: Option<String>,
    /// Documents per kept output shard.
    #[arg(long)]
    shard_size: Option<usize>,
    /// Kept documents to divert into holdout.jsonl.gz.
    #[arg(long)]
    holdout_count: Option<u64>,
    /// Fatal threshold for the unreadable-document fraction.
    #[arg(long)]
    error_budget: Option<f64>,
    /// Reservoir capacity for the report's distribution summaries.
    #[arg(long)]
    max_in_memory: Option<usize>,
}

/// TOML mirror of the sample flags; any field may be omitted.
#[derive(Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SampleFileConfig {
    input: Option<Vec<String>>,
    model: Option<PathBuf>,
    sampler: Option<PathBuf>,
    out_dir: Option<PathBuf>,
    seed: Option<u64>,
    threads: Option<usize>,
    text_field: Option<String>,
    shard_size: Option<usize>,
    holdout_count: Option<u64>,
    error_budget: Option<f64>,
    max_in_memory: Option<usize>,
}

fn require<T>(value: Option<T>, flag: &str) -> CliResult<T> {
    value.ok_or_else(|| Failure::usage(format!("missing {flag} (flag or config file)")))
}

fn run_sample(args: SampleArgs) -> CliResult<()> {
    let file: SampleFileConfig = match &args.config {
        Some(path) => {
            let raw = fs::read_to_string(path).map_err(|e| read_io(path, e))?;
            toml::from_str(&raw).map_err(|e| Failure::data(format!("{}: {e}", path.display())))?
        }
        None => SampleFileConfig::default(),
    };
    let input = if args.input.is_empty() {
        require(file.input, "--input")?
    } else {
        args.input
    };
    let model = require(args.model.or(file.model), "--model")?;
    let sampler_path = require(args.sampler.or(file.sampler), "--sampler")?;
    let out_dir = require(args.out_dir.or(file.out_dir), "--out-dir")?;

    let raw = fs::read_to_string(&sampler_path).map_err(|e| read_io(&sampler_path, e))?;
    let mut sampler: SamplerSpec = serde_json::from_str(&raw)
        .map_err(|e| Failure::data(format!("{}: {e}", sampler_path.display())))?;
    sampler.seed = resolve_seed(args.seed, &[file.seed], sampler.seed)?;

    let mut config = RunConfig::new(input, model, sampler, out_dir);
    if let Some(text_field) = args.text_field.or(file.text_field) {
        config.text_field = text_field;
    }
    if let Some(threads) = args.threads.or(file.threads) {
        config.threads = threads;
    }
    if let Some(shard_size) = args.shard_size.or(file.shard_size) {
        config.shard_size = shard_size;
    }
    if let Some(holdout_count) = args.holdout_count.or(file.holdout_count) {
        config.holdout_count = holdout_count;
    }
    if let Some(error_budget) = args.error_budget.or(file.error_budget) {
        config.error_budget = error_budget;
    }
    if let Some(max_in_memory) = args.max_in_memory.or(file.max_in_memory) {
        config.max_in_memory = max_in_memory;
    }

    let report = run_sampling(&config).map_err(|e| pipeline_error(e, Code::Usage))?;
    println!(
        "kept {} of {} scored documents ({:.2}%), {} errored, {:.1}s → {}",
        report.docs_kept,
        report.docs_seen - report.docs_errored,
        report.kept_fraction * 100.0,
        report.docs_errored,
        report.wall_time,
        config.output_dir.display()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// stats
// ---------------------------------------------------------------------------

#[derive(Args)]
struct StatsArgs {
    /// Scores sidecar (scores.jsonl) from `ppx sample` or `ppx score`.
    #[arg(long)]
    scores: PathBuf,
    /// Number of log-spaced histogram bins.
    #[arg(long, default_value_t = HISTOGRAM_BINS)]
    bins: usize,
    /// Output prefix; writes <prefix>hist.csv and <prefix>hist.svg.
    #[arg(long)]
    out_prefix: String,
}

/// Split an output prefix into (directory, filename prefix): "runs/a-" is
/// directory "runs" plus prefix "a-", while "runs/" leaves the prefix empty.
fn split_prefix(prefix: &str) -> (PathBuf, String) {
    if prefix.is_empty() {
        return (PathBuf::from("."), String::new());
    }
    if prefix.ends_with(std::path::MAIN_SEPARATOR) {
        return (PathBuf::from(prefix), String::new());
    }
    let path = Path::new(prefix);
    let dir = match path.parent() {
        Some(parent) if !parent.as_os_str().is_empty() => parent.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let base = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    (dir, base)
}

fn run_stats(args: StatsArgs) -> CliResult<()> {
    if args.bins == 0 {
        return Err(Failure::usage("--bins must be at least 1"));
    }
    let (dir, base) = split_prefix(&args.out_prefix);
    fs::create_dir_all(&dir).map_err(|e| read_io(&dir, e))?;
    let report =
        emit_stats(&args.scores, args.bins, &dir).map_err(|e| pipeline_error(e, Code::Data))?;
    let (mut csv_path, mut svg_path) = (report.csv_path, report.svg_path);
    if !base.is_empty() {
        let csv_to = dir.join(format!("{base}hist.csv"));
        let svg_to = dir.join(format!("{base}hist.svg"));
        fs::rename(&csv_path, &csv_to).map_err(|e| read_io(&csv_to, e))?;
        fs::rename(&svg_path, &svg_to).map_err(|e| read_io(&svg_to, e))?;
        (csv_path, svg_path) = (csv_to, svg_to);
    }
    let (q1, q2, q3) = report.quartiles;
    println!(
        "{} documents ({} kept): q1={q1:.6e} q2={q2:.6e} q3={q3:.6e}",
        report.docs, report.kept
    );
    println!("wrote {} and {}", csv_path.display(), svg_path.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// holdout
// ---------------------------------------------------------------------------

#[derive(Args)]
struct HoldoutArgs {
    /// Directory holding the kept corpus shards.
    #[arg(long)]
    kept_dir: PathBuf,
    /// Shard filename pattern inside --kept-dir.
    #[arg(long, default_value = "kept-*.jsonl.gz")]
    pattern: String,
    /// Number of documents to divert into the holdout set.
    #[arg(long)]
    count: u64,
    /// Selection seed (fallback: PPX_SEED, then 0).
    #[arg(long)]
    seed: Option<u64>,
    /// Documents per train output shard.
    #[arg(long, default_value_t = 100_000)]
    shard_size: usize,
    /// Filename prefix for the train shards.
    #[arg(long, default_value = "train-")]
    train_prefix: String,
    /// Output directory for train shards and holdout.jsonl.gz.
    #[arg(long)]
    out: PathBuf,
}

fn run_holdout(args: HoldoutArgs) -> CliResult<()> {
    if args.shard_size == 0 {
        return Err(Failure::usage("--shard-size must be at least 1"));
    }
    let seed = resolve_seed(args.seed, &[], 0)?;
    let pattern = args.kept_dir.join(&args.pattern).display().to_string();
    let files = expand_inputs(&[pattern]).map_err(|e| pipeline_error(e, Code::Io))?;
    let report = split_holdout(
        &files,
        args.count,
        seed,
        &args.out,
        &args.train_prefix,
        args.shard_size,
    )
    .map_err(|e| pipeline_error(e, Code::Data))?;
    println!(
        "holdout {} documents → {}; {} train documents in {} shards",
        report.holdout_written,
        report.holdout_file.display(),
        report.train_written,
        report.train_files.len()
    );
    Ok(())
}

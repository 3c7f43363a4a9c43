//! End-to-end runs over real files: identity sampling, determinism,
//! sharding, holdout, and the error budget.

use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use ppx_core::lm::{save_model, train_model};
use ppx_core::pipeline::{open_text_reader, run_sampling, PipelineError, RunConfig, SidecarRecord};
use ppx_core::sampling::SamplerSpec;

const WORDS: [&str; 12] = [
    "the", "cat", "sat", "dog", "ran", "bird", "flew", "fish", "swam", "big", "small", "red",
];

fn word(h: u64) -> &'static str {
    WORDS[(h % WORDS.len() as u64) as usize]
}

/// Deterministic pseudo-random document: 1-3 lines, 2-7 tokens each.
fn doc_json(i: usize) -> String {
    let mut h = (i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(17);
    let mut next = move || {
        h = h
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        h >> 33
    };
    let nlines = 1 + (next() % 3) as usize;
    let lines: Vec<String> = (0..nlines)
        .map(|_| {
            let ntok = 2 + (next() % 6) as usize;
            (0..ntok).map(|_| word(next())).collect::<Vec<_>>().join(" ")
        })
        .collect();
    serde_json::json!({"id": format!("doc-{i}"), "text": lines.join("\n")}).to_string()
}

fn write_plain(path: &Path, lines: &[String]) {
    std::fs::write(path, lines.join("\n") + "\n").unwrap();
}

fn write_gzip(path: &Path, lines: &[String]) {
    let file = std::fs::File::create(path).unwrap();
    let mut enc = flate2::write::GzEncoder::new(file, flate2::Compression::default());
    enc.write_all((lines.join("\n") + "\n").as_bytes()).unwrap();
    enc.finish().unwrap();
}

fn model_fixture(dir: &Path) -> PathBuf {
    let corpus: Vec<String> = (0..60)
        .map(|i| {
            let mut h = (i as u64).wrapping_mul(0xD134_2543_DE82_EF95).wrapping_add(3);
            let mut next = move || {
                h = h
                    .wrapping_mul(6364136223846793005)
                    .wrapping_add(1442695040888963407);
                h >> 33
            };
            let ntok = 2 + (next() % 5) as usize;
            (0..ntok).map(|_| word(next())).collect::<Vec<_>>().join(" ")
        })
        .collect();
    let model = train_model(corpus.iter().map(String::as_str), 3).unwrap();
    let path = dir.join("model.arpa");
    save_model(&model, &path).unwrap();
    path
}

fn read_all_lines(path: &Path) -> Vec<String> {
    let mut reader = open_text_reader(path).unwrap();
    let mut out = Vec::new();
    let mut buf = String::new();
    loop {
        buf.clear();
        if reader.read_line(&mut buf).unwrap() == 0 {
            break;
        }
        let line = buf.trim_end();
        if !line.is_empty() {
            out.push(line.to_string());
        }
    }
    out
}

fn sidecar(out_dir: &Path) -> Vec<SidecarRecord> {
    read_all_lines(&out_dir.join("scores.jsonl"))
        .iter()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

fn kept_shards(out_dir: &Path) -> Vec<PathBuf> {
    let mut shards: Vec<PathBuf> = std::fs::read_dir(out_dir)
        .unwrap()
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| {
            let name = p.file_name().unwrap().to_string_lossy();
            name.starts_with("kept-") && name.ends_with(".jsonl.gz")
        })
        .collect();
    shards.sort();
    shards
}

fn shard_ids(paths: &[PathBuf]) -> Vec<String> {
    let mut ids = Vec::new();
    for path in paths {
        for line in read_all_lines(path) {
            let v: serde_json::Value = serde_json::from_str(&line).unwrap();
            ids.push(v["id"].as_str().unwrap().to_string());
        }
    }
    ids
}

fn base_config(dir: &Path, input: &Path, sampler: SamplerSpec, out: &str) -> RunConfig {
    RunConfig::new(
        vec![input.display().to_string()],
        dir.join("model.arpa"),
        sampler,
        dir.join(out),
    )
}

#[test]
fn keep_all_run_is_an_identity() {
    let dir = tempfile::tempdir().unwrap();
    model_fixture(dir.path());
    let docs: Vec<String> = (0..200).map(doc_json).collect();
    let input = dir.path().join("in.jsonl");
    write_plain(&input, &docs);

    let config = base_config(dir.path(), &input, SamplerSpec::random(1.0, 11), "out");
    let report = run_sampling(&config).unwrap();

    assert_eq!(report.docs_seen, 200);
    assert_eq!(report.docs_kept, 200);
    assert_eq!(report.docs_errored, 0);
    assert_eq!(report.kept_fraction, 1.0);

    // With everything kept, both summaries describe the same stream.
    let input_summary = report.input_summary.unwrap();
    let kept_summary = report.kept_summary.unwrap();
    assert_eq!(input_summary.count, kept_summary.count);
    assert_eq!(input_summary.quartiles(), kept_summary.quartiles());
    assert_eq!(input_summary.min, kept_summary.min);
    assert_eq!(input_summary.max, kept_summary.max);

    // Kept shards carry the original records verbatim, in input order.
    let shards = kept_shards(&config.output_dir);
    let mut kept_lines = Vec::new();
    for shard in &shards {
        kept_lines.extend(read_all_lines(shard));
    }
    assert_eq!(kept_lines, docs);

    // The sidecar covers every document exactly once, all flagged kept.
    let scores = sidecar(&config.output_dir);
    assert_eq!(scores.len(), 200);
    assert!(scores.iter().all(|r| r.kept));
    assert!(scores.iter().all(|r| r.pp > 1.0 && r.pp.is_finite()));
    let mut ids: Vec<&str> = scores.iter().map(|r| r.id.as_str()).collect();
    ids.dedup();
    assert_eq!(ids.len(), 200);
}

#[test]
fn keep_none_still_scores_everything() {
    let dir = tempfile::tempdir().unwrap();
    model_fixture(dir.path());
    let docs: Vec<String> = (0..80).map(doc_json).collect();
    let input = dir.path().join("in.jsonl");
    write_plain(&input, &docs);

    let config = base_config(dir.path(), &input, SamplerSpec::random(0.0, 11), "out");
    let report = run_sampling(&config).unwrap();
    assert_eq!(report.docs_seen, 80);
    assert_eq!(report.docs_kept, 0);
    assert_eq!(report.kept_fraction, 0.0);
    assert!(report.kept_summary.is_none());
    assert!(kept_shards(&config.output_dir).is_empty());
    let scores = sidecar(&config.output_dir);
    assert_eq!(scores.len(), 80);
    assert!(scores.iter().all(|r| !r.kept));

    // The histogram still exists, with an all-zero kept column.
    let csv = std::fs::read_to_string(config.output_dir.join("hist.csv")).unwrap();
    for line in csv.lines().skip(1) {
        assert!(line.ends_with(",0"), "kept column should be zero: {line}");
    }
}

#[test]
fn reruns_are_byte_identical_and_thread_count_is_irrelevant() {
    let dir = tempfile::tempdir().unwrap();
    model_fixture(dir.path());
    let docs: Vec<String> = (0..150).map(doc_json).collect();
    let input = dir.path().join("in.jsonl");
    write_plain(&input, &docs);

    let sampler = SamplerSpec::random(0.5, 424242);
    let mut configs = Vec::new();
    for (out, threads) in [("out1", 0), ("out2", 0), ("out3", 2)] {
        let mut config = base_config(dir.path(), &input, sampler.clone(), out);
        config.threads = threads;
        run_sampling(&config).unwrap();
        configs.push(config);
    }
    let bytes: Vec<Vec<u8>> = configs
        .iter()
        .map(|c| std::fs::read(c.output_dir.join("scores.jsonl")).unwrap())
        .collect();
    assert_eq!(bytes[0], bytes[1], "same seed, same sidecar");
    assert_eq!(bytes[0], bytes[2], "thread count must not change results");

    let kept: Vec<Vec<String>> = configs
        .iter()
        .map(|c| shard_ids(&kept_shards(&c.output_dir)))
        .collect();
    assert_eq!(kept[0], kept[1]);
    assert_eq!(kept[0], kept[2]);
    assert!(!kept[0].is_empty() && kept[0].len() < 150);
}

#[test]
fn different_seeds_keep_different_documents() {
    let dir = tempfile::tempdir().unwrap();
    model_fixture(dir.path());
    let docs: Vec<String> = (0..150).map(doc_json).collect();
    let input = dir.path().join("in.jsonl");
    write_plain(&input, &docs);

    let a = base_config(dir.path(), &input, SamplerSpec::random(0.5, 1), "outa");
    let b = base_config(dir.path(), &input, SamplerSpec::random(0.5, 2), "outb");
    run_sampling(&a).unwrap();
    run_sampling(&b).unwrap();
    assert_ne!(
        shard_ids(&kept_shards(&a.output_dir)),
        shard_ids(&kept_shards(&b.output_dir))
    );
}

#[test]
fn input_file_grouping_does_not_change_the_kept_set() {
    let dir = tempfile::tempdir().unwrap();
    model_fixture(dir.path());
    let docs: Vec<String> = (0..120).map(doc_json).collect();

    // Same documents, split differently and in a different global order.
    let a1 = dir.path().join("a1.jsonl");
    let a2 = dir.path().join("a2.jsonl");
    write_plain(&a1, &docs[..70]);
    write_plain(&a2, &docs[70..]);

    let b1 = dir.path().join("b1.jsonl");
    let b2 = dir.path().join("b2.jsonl");
    write_plain(&b1, &docs[40..]);
    write_plain(&b2, &docs[..40]);

    let sampler = SamplerSpec::random(0.4, 99);
    let mut ca = base_config(dir.path(), &a1, sampler.clone(), "outa");
    ca.input_paths = vec![a1.display().to_string(), a2.display().to_string()];
    let mut cb = base_config(dir.path(), &b1, sampler, "outb");
    cb.input_paths = vec![b1.display().to_string(), b2.display().to_string()];

    run_sampling(&ca).unwrap();
    run_sampling(&cb).unwrap();

    let mut ids_a = shard_ids(&kept_shards(&ca.output_dir));
    let mut ids_b = shard_ids(&kept_shards(&cb.output_dir));
    assert!(!ids_a.is_empty());
    ids_a.sort();
    ids_b.sort();
    assert_eq!(ids_a, ids_b, "kept set must not depend on file grouping");
}

#[test]
fn gzip_inputs_score_identically_to_plain() {
    let dir = tempfile::tempdir().unwrap();
    model_fixture(dir.path());
    let docs: Vec<String> = (0..50).map(doc_json).collect();
    let plain = dir.path().join("in.jsonl");
    let zipped = dir.path().join("in.jsonl.gz");
    write_plain(&plain, &docs);
    write_gzip(&zipped, &docs);

    let cp = base_config(dir.path(), &plain, SamplerSpec::random(0.7, 5), "outp");
    let cz = base_config(dir.path(), &zipped, SamplerSpec::random(0.7, 5), "outz");
    run_sampling(&cp).unwrap();
    run_sampling(&cz).unwrap();
    assert_eq!(
        std::fs::read(cp.output_dir.join("scores.jsonl")).unwrap(),
        std::fs::read(cz.output_dir.join("scores.jsonl")).unwrap()
    );
}

#[test]
fn holdout_split_inside_the_run_partitions_the_kept_set() {
    let dir = tempfile::tempdir().unwrap();
    model_fixture(dir.path());
    let docs: Vec<String> = (0..300).map(doc_json).collect();
    let input = dir.path().join("in.jsonl");
    write_plain(&input, &docs);

    let mut config = base_config(dir.path(), &input, SamplerSpec::random(0.8, 31), "out");
    config.holdout_count = 40;
    config.shard_size = 50;
    let report = run_sampling(&config).unwrap();

    let train_ids = shard_ids(&kept_shards(&config.output_dir));
    let holdout_path = config.output_dir.join("holdout.jsonl.gz");
    let holdout_ids = shard_ids(&[holdout_path]);
    assert_eq!(holdout_ids.len(), 40);
    assert_eq!(train_ids.len() + 40, report.docs_kept as usize);
    for id in &holdout_ids {
        assert!(!train_ids.contains(id), "{id} in both train and holdout");
    }

    // Union equals the documents the sidecar says were kept.
    let mut union: Vec<String> = train_ids.iter().chain(holdout_ids.iter()).cloned().collect();
    union.sort();
    let mut expected: Vec<String> = sidecar(&config.output_dir)
        .into_iter()
        .filter(|r| r.kept)
        .map(|r| r.id)
        .collect();
    expected.sort();
    assert_eq!(union, expected);

    // No leftover temporary shards.
    assert!(std::fs::read_dir(&config.output_dir)
        .unwrap()
        .all(|e| !e.unwrap().file_name().to_string_lossy().contains("tmp")));
}

#[test]
fn error_budget_separates_tolerable_from_fatal() {
    let dir = tempfile::tempdir().unwrap();
    model_fixture(dir.path());
    let mut docs: Vec<String> = (0..100).map(doc_json).collect();
    for i in [10, 30, 50, 70, 90] {
        docs[i] = "{broken".to_string();
    }
    let input = dir.path().join("in.jsonl");
    write_plain(&input, &docs);

    // 5% bad records blow the default 1% budget...
    let config = base_config(dir.path(), &input, SamplerSpec::random(1.0, 3), "out_fatal");
    let err = run_sampling(&config).unwrap_err();
    assert!(matches!(err, PipelineError::ErrorBudget { errored: 5, .. }));
    assert!(config.output_dir.join("MANIFEST.partial.json").exists());

    // ...but pass under a 10% budget, skipped and counted.
    let mut config = base_config(dir.path(), &input, SamplerSpec::random(1.0, 3), "out_ok");
    config.error_budget = 0.10;
    let report = run_sampling(&config).unwrap();
    assert_eq!(report.docs_seen, 100);
    assert_eq!(report.docs_errored, 5);
    assert_eq!(report.docs_kept, 95);
    assert_eq!(report.kept_fraction, 1.0);
    assert_eq!(sidecar(&config.output_dir).len(), 95);
    assert!(!config.output_dir.join("MANIFEST.partial.json").exists());
}

#[test]
fn conservation_holds_on_a_mixed_run() {
    let dir = tempfile::tempdir().unwrap();
    model_fixture(dir.path());
    let mut docs: Vec<String> = (0..250).map(doc_json).collect();
    docs[7] = serde_json::json!({"id": "no-text", "body": "wrong field"}).to_string();
    docs[123] = "not json at all".to_string();
    let input = dir.path().join("in.jsonl");
    write_plain(&input, &docs);

    let mut config = base_config(dir.path(), &input, SamplerSpec::random(0.6, 77), "out");
    config.error_budget = 0.05;
    config.shard_size = 64;
    let report = run_sampling(&config).unwrap();

    assert_eq!(report.docs_seen, 250);
    assert_eq!(report.docs_errored, 2);
    let scores = sidecar(&config.output_dir);
    assert_eq!(scores.len(), 248, "sidecar covers every non-errored doc");
    let kept_in_sidecar = scores.iter().filter(|r| r.kept).count() as u64;
    assert_eq!(report.docs_kept, kept_in_sidecar);
    assert_eq!(
        shard_ids(&kept_shards(&config.output_dir)).len() as u64,
        report.docs_kept
    );
    let dropped = scores.iter().filter(|r| !r.kept).count() as u64;
    assert_eq!(
        report.docs_seen,
        report.docs_kept + dropped + report.docs_errored,
        "docs_seen = kept + dropped + errored"
    );
    assert!(
        (report.kept_fraction - report.docs_kept as f64 / 248.0).abs() < 1e-12,
        "kept fraction is relative to scored documents"
    );

    // The histogram CSV agrees with the report.
    let csv = std::fs::read_to_string(config.output_dir.join("hist.csv")).unwrap();
    let (mut all, mut kept) = (0u64, 0u64);
    for line in csv.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        all += fields[2].parse::<u64>().unwrap();
        kept += fields[3].parse::<u64>().unwrap();
    }
    assert_eq!(all, 248);
    assert_eq!(kept, report.docs_kept);
}

#[test]
fn empty_input_file_produces_an_empty_run() {
    let dir = tempfile::tempdir().unwrap();
    model_fixture(dir.path());
    let input = dir.path().join("empty.jsonl");
    std::fs::write(&input, "").unwrap();

    let config = base_config(dir.path(), &input, SamplerSpec::random(0.5, 1), "out");
    let report = run_sampling(&config).unwrap();
    assert_eq!(report.docs_seen, 0);
    assert_eq!(report.docs_kept, 0);
    assert_eq!(report.kept_fraction, 0.0);
    assert!(report.input_summary.is_none());
    assert!(config.output_dir.join("scores.jsonl").exists());
    assert!(!config.output_dir.join("hist.csv").exists());
    assert!(config.output_dir.join("report.json").exists());
}

#[test]
fn missing_inputs_and_unreadable_files_are_fatal() {
    let dir = tempfile::tempdir().unwrap();
    model_fixture(dir.path());

    let mut config = base_config(
        dir.path(),
        &dir.path().join("nope.jsonl"),
        SamplerSpec::random(0.5, 1),
        "out",
    );
    config.input_paths = vec![format!("{}/*.parquet", dir.path().display())];
    assert!(matches!(
        run_sampling(&config).unwrap_err(),
        PipelineError::NoInputs { .. }
    ));
}

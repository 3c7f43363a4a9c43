//! JSON-lines ingestion with transparent gzip and deterministic ordering.

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use flate2::read::MultiGzDecoder;

use crate::perplexity::{DocSource, Document};

use super::PipelineError;

/// One ingested record: the parsed document plus the original JSON line,
/// which kept shards write back verbatim.
#[derive(Debug, Clone)]
pub struct IngestedRecord {
    pub doc: Document,
    pub raw: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RecordErrorKind {
    /// The line is not a JSON object.
    MalformedJson(String),
    /// The object lacks the configured text field (or it is not a string).
    MissingText(String),
    /// Read failure mid-file; fatal for the whole run.
    Io(String),
}

/// A per-record ingestion failure, located by file and line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecordError {
    pub path: String,
    pub line: u64,
    pub kind: RecordErrorKind,
}

impl fmt::Display for RecordError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let what = match &self.kind {
            RecordErrorKind::MalformedJson(m) => format!("malformed JSON: {m}"),
            RecordErrorKind::MissingText(field) => {
                format!("missing or non-string text field `{field}`")
            }
            RecordErrorKind::Io(m) => format!("read error: {m}"),
        };
        write!(f, "{}:{}: {}", self.path, self.line, what)
    }
}

impl std::error::Error for RecordError {}

/// Expand paths and glob patterns into a sorted, deduplicated file list.
/// A pattern that matches nothing (and is not an existing path) is an error.
pub fn expand_inputs(patterns: &[String]) -> Result<Vec<PathBuf>, PipelineError> {
    let mut files: Vec<PathBuf> = Vec::new();
    for pattern in patterns {
        if Path::new(pattern).is_file() {
            files.push(PathBuf::from(pattern));
            continue;
        }
        let mut matched = 0usize;
        for entry in glob::glob(pattern)? {
            match entry {
                Ok(path) => {
                    if path.is_file() {
                        files.push(path);
                        matched += 1;
                    }
                }
                Err(e) => {
                    let path = e.path().to_path_buf();
                    return Err(super::io_err(&path, e.into()));
                }
            }
        }
        if matched == 0 {
            return Err(PipelineError::NoInputs {
                pattern: pattern.clone(),
            });
        }
    }
    files.sort();
    files.dedup();
    Ok(files)
}

/// Open a file for line reading, decompressing gzip transparently (detected
/// by the 1f 8b magic bytes, not the extension).
pub fn open_text_reader(path: &Path) -> Result<Box<dyn BufRead + Send>, PipelineError> {
    let file = File::open(path).map_err(|e| super::io_err(path, e))?;
    let mut reader = BufReader::with_capacity(64 * 1024, file);
    let magic = reader.fill_buf().map_err(|e| super::io_err(path, e))?;
    if magic.starts_with(&[0x1f, 0x8b]) {
        Ok(Box::new(BufReader::with_capacity(
            64 * 1024,
            MultiGzDecoder::new(reader),
        )))
    } else {
        Ok(Box::new(reader))
    }
}

/// Streaming reader over a list of JSON-lines files, yielding documents in
/// deterministic order: files as given (callers pass them sorted), records
/// in file order. Malformed records come out as inline errors so the caller
/// can count them against its budget.
pub struct DocumentReader {
    files: Vec<PathBuf>,
    text_field: String,
    next_file: usize,
    current: Option<FileCursor>,
}

struct FileCursor {
    path: PathBuf,
    basename: String,
    reader: Box<dyn BufRead + Send>,
    line: u64,
    failed: bool,
}

impl DocumentReader {
    pub fn new(files: Vec<PathBuf>, text_field: impl Into<String>) -> DocumentReader {
        DocumentReader {
            files,
            text_field: text_field.into(),
            next_file: 0,
            current: None,
        }
    }

    fn parse(&self, cursor: &FileCursor, index: u64, line: &str) -> Result<IngestedRecord, RecordError> {
        let record_err = |kind| RecordError {
            path: cursor.path.display().to_string(),
            line: index + 1,
            kind,
        };
        let value: serde_json::Value = serde_json::from_str(line)
            .map_err(|e| record_err(RecordErrorKind::MalformedJson(e.to_string())))?;
        let obj = value
            .as_object()
            .ok_or_else(|| record_err(RecordErrorKind::MalformedJson("not an object".into())))?;
        let text = obj
            .get(&self.text_field)
            .and_then(|v| v.as_str())
            .ok_or_else(|| record_err(RecordErrorKind::MissingText(self.text_field.clone())))?;
        let id = match obj.get("id").and_then(|v| v.as_str()) {
            Some(explicit) => explicit.to_string(),
            None => format!("{}:{}", cursor.basename, index),
        };
        let lines: Vec<String> = text.split('\n').map(str::to_string).collect();
        let doc = Document::new(
            id,
            lines,
            DocSource {
                path: cursor.path.display().to_string(),
                record: index,
            },
        );
        Ok(IngestedRecord {
            doc,
            raw: line.to_string(),
        })
    }
}

impl Iterator for DocumentReader {
    type Item = Result<IngestedRecord, RecordError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            if self.current.is_none() {
                if self.next_file >= self.files.len() {
                    return None;
                }
                let path = self.files[self.next_file].clone();
                self.next_file += 1;
                let basename = path
                    .file_name()
                    .map(|n| n.to_string_lossy().into_owned())
                    .unwrap_or_else(|| path.display().to_string());
                match open_text_reader(&path) {
                    Ok(reader) => {
                        self.current = Some(FileCursor {
                            path,
                            basename,
                            reader,
                            line: 0,
                            failed: false,
                        });
                    }
                    Err(PipelineError::Io { path, source }) => {
                        return Some(Err(RecordError {
                            path: path.display().to_string(),
                            line: 0,
                            kind: RecordErrorKind::Io(source.to_string()),
                        }));
                    }
                    Err(other) => {
                        return Some(Err(RecordError {
                            path: "".into(),
                            line: 0,
                            kind: RecordErrorKind::Io(other.to_string()),
                        }));
                    }
                }
            }
            let cursor = self.current.as_mut().expect("cursor was just installed");
            if cursor.failed {
                // After a mid-file read error, skip to the next file rather
                // than looping on the same failure.
                self.current = None;
                continue;
            }
            let mut buf = String::new();
            match cursor.reader.read_line(&mut buf) {
                Ok(0) => {
                    self.current = None;
                    continue;
                }
                Ok(_) => {
                    let index = cursor.line;
                    cursor.line += 1;
                    let trimmed = buf.trim_end_matches(['\n', '\r']);
                    let cursor = self.current.as_ref().expect("cursor is live");
                    return Some(self.parse(cursor, index, trimmed));
                }
                Err(e) => {
                    cursor.failed = true;
                    let err = RecordError {
                        path: cursor.path.display().to_string(),
                        line: cursor.line + 1,
                        kind: RecordErrorKind::Io(e.to_string()),
                    };
                    return Some(Err(err));
                }
            }
        }
    }
}

/// Convenience wrapper: expand patterns and stream every record.
pub fn ingest(
    patterns: &[String],
    text_field: &str,
) -> Result<DocumentReader, PipelineError> {
    let files = expand_inputs(patterns)?;
    Ok(DocumentReader::new(files, text_field))
}

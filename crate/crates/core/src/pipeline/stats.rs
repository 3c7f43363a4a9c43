//! Histogram artifacts from a scores sidecar: a CSV of log-spaced bins and
//! a self-contained SVG overlaying the input and kept distributions with
//! quartile markers.
//!
//! Both outputs are derived in two streaming passes over the sidecar (range
//! and quartiles first, then binning), so they work on sidecars of any size
//! with bounded memory. Binning happens in log10 space, where document
//! perplexities are always finite even when their linear value overflows.

use std::fs::File;
use std::io::{BufRead, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::sampling::{quantile, Reservoir};

use super::ingest::open_text_reader;
use super::{io_err, PipelineError};

/// Reservoir capacity for the quartile markers; sidecars at most this large
/// get exact quartiles.
const QUARTILE_SAMPLE: usize = 100_000;

/// Seed for the quartile reservoir. Fixed so the same sidecar always yields
/// the same artifacts.
const STATS_SEED: u64 = 0x6869_7374_5f71_7274;

/// What [`emit_stats`] wrote. Quartiles are of the full scored
/// distribution, in linear perplexity.
#[derive(Debug, Clone, PartialEq)]
pub struct StatsReport {
    pub docs: u64,
    pub kept: u64,
    pub quartiles: (f64, f64, f64),
    pub csv_path: PathBuf,
    pub svg_path: PathBuf,
}

/// The sidecar fields the histograms need; everything else is ignored so
/// the reader stays compatible with sidecar extensions.
#[derive(Deserialize)]
struct ScoreRow {
    log10_pp: f64,
    kept: bool,
}

fn for_each_row<F>(path: &Path, mut f: F) -> Result<(), PipelineError>
where
    F: FnMut(ScoreRow) -> Result<(), PipelineError>,
{
    let mut reader = open_text_reader(path)?;
    let mut buf = String::new();
    let mut lineno = 0u64;
    loop {
        buf.clear();
        let n = reader.read_line(&mut buf).map_err(|e| io_err(path, e))?;
        if n == 0 {
            return Ok(());
        }
        lineno += 1;
        let line = buf.trim_end();
        if line.is_empty() {
            continue;
        }
        let row: ScoreRow = serde_json::from_str(line).map_err(|e| {
            PipelineError::Config(format!(
                "{}:{lineno}: not a scores record: {e}",
                path.display()
            ))
        })?;
        if !row.log10_pp.is_finite() {
            return Err(PipelineError::Config(format!(
                "{}:{lineno}: non-finite log10_pp",
                path.display()
            )));
        }
        f(row)?;
    }
}

/// Render histogram artifacts for a scores sidecar: `hist.csv` with columns
/// `lo,hi,count_all,count_kept` (log-spaced bin edges in linear perplexity)
/// and `hist.svg` overlaying the kept distribution on the input one, with
/// the input quartiles marked. Every scored document lands in exactly one
/// bin, so the CSV columns sum to the scored and kept document counts.
pub fn emit_stats(
    scores: &Path,
    bins: usize,
    output_dir: &Path,
) -> Result<StatsReport, PipelineError> {
    if bins == 0 {
        return Err(PipelineError::Config("bins must be positive".into()));
    }

    let mut docs = 0u64;
    let mut kept = 0u64;
    let mut lmin = f64::INFINITY;
    let mut lmax = f64::NEG_INFINITY;
    let mut reservoir = Reservoir::new(QUARTILE_SAMPLE, STATS_SEED);
    for_each_row(scores, |row| {
        docs += 1;
        if row.kept {
            kept += 1;
        }
        lmin = lmin.min(row.log10_pp);
        lmax = lmax.max(row.log10_pp);
        reservoir.push(row.log10_pp);
        Ok(())
    })?;
    if docs == 0 {
        return Err(PipelineError::EmptyScores {
            path: scores.to_path_buf(),
        });
    }

    let mut retained = reservoir.values().to_vec();
    retained.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    let lq = (
        quantile(&retained, 0.25),
        quantile(&retained, 0.50),
        quantile(&retained, 0.75),
    );

    let nbins = if lmin == lmax { 1 } else { bins };
    let span = lmax - lmin;
    let mut count_all = vec![0u64; nbins];
    let mut count_kept = vec![0u64; nbins];
    for_each_row(scores, |row| {
        let idx = if span == 0.0 {
            0
        } else {
            ((((row.log10_pp - lmin) / span) * nbins as f64) as usize).min(nbins - 1)
        };
        count_all[idx] += 1;
        if row.kept {
            count_kept[idx] += 1;
        }
        Ok(())
    })?;

    std::fs::create_dir_all(output_dir).map_err(|e| io_err(output_dir, e))?;
    let csv_path = output_dir.join("hist.csv");
    let csv_file = File::create(&csv_path).map_err(|e| io_err(&csv_path, e))?;
    let mut csv = BufWriter::new(csv_file);
    let edge = |i: usize| 10f64.powf(lmin + span * i as f64 / nbins as f64);
    (|| -> std::io::Result<()> {
        writeln!(csv, "lo,hi,count_all,count_kept")?;
        for i in 0..nbins {
            writeln!(
                csv,
                "{},{},{},{}",
                edge(i),
                edge(i + 1),
                count_all[i],
                count_kept[i]
            )?;
        }
        csv.flush()
    })()
    .map_err(|e| io_err(&csv_path, e))?;

    let svg_path = output_dir.join("hist.svg");
    let svg = render_svg(&count_all, &count_kept, lmin, lmax, lq, docs, kept);
    std::fs::write(&svg_path, svg).map_err(|e| io_err(&svg_path, e))?;

    Ok(StatsReport {
        docs,
        kept,
        quartiles: (
            10f64.powf(lq.0),
            10f64.powf(lq.1),
            10f64.powf(lq.2),
        ),
        csv_path,
        svg_path,
    })
}

/// Static, deterministic SVG: input bars behind kept bars on a log-scaled
/// perplexity axis, quartile markers dashed on top.
fn render_svg(
    count_all: &[u64],
    count_kept: &[u64],
    lmin: f64,
    lmax: f64,
    lq: (f64, f64, f64),
    docs: u64,
    kept: u64,
) -> String {
    const W: f64 = 860.0;
    const H: f64 = 460.0;
    const ML: f64 = 72.0;
    const MT: f64 = 56.0;
    const PW: f64 = 760.0;
    const PH: f64 = 320.0;
    let base = MT + PH;
    let span = if lmax > lmin { lmax - lmin } else { 1.0 };
    let x_of = |l: f64| {
        if lmax > lmin {
            ML + (l - lmin) / span * PW
        } else {
            ML + PW / 2.0
        }
    };
    let max_count = count_all.iter().copied().max().unwrap_or(0).max(1) as f64;

    let mut s = String::with_capacity(16 * 1024);
    s.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" \
         viewBox=\"0 0 {W} {H}\" font-family=\"sans-serif\">\n"
    ));
    s.push_str(&format!("<rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>\n"));
    s.push_str(&format!(
        "<text x=\"{:.0}\" y=\"26\" text-anchor=\"middle\" font-size=\"16\">\
         Document perplexity distribution</text>\n",
        W / 2.0
    ));
    s.push_str(&format!(
        "<text x=\"{:.0}\" y=\"44\" text-anchor=\"middle\" font-size=\"11\" \
         fill=\"#555555\">{docs} documents scored, {kept} kept</text>\n",
        W / 2.0
    ));

    // Horizontal gridlines and count labels.
    for i in 0..=4u32 {
        let frac = f64::from(i) / 4.0;
        let y = base - PH * frac;
        let label = (max_count * frac).round() as u64;
        s.push_str(&format!(
            "<line x1=\"{ML}\" y1=\"{y:.2}\" x2=\"{:.2}\" y2=\"{y:.2}\" \
             stroke=\"#dddddd\"/>\n",
            ML + PW
        ));
        s.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\" font-size=\"10\" \
             fill=\"#333333\">{label}</text>\n",
            ML - 6.0,
            y + 3.0
        ));
    }

    // Bars: the full scored distribution behind, kept documents in front.
    let bw = PW / count_all.len() as f64;
    for (color, opacity, counts) in [
        ("#4878a8", "0.85", count_all),
        ("#e08214", "0.80", count_kept),
    ] {
        for (i, &n) in counts.iter().enumerate() {
            if n == 0 {
                continue;
            }
            let bh = (n as f64 / max_count) * PH;
            s.push_str(&format!(
                "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" \
                 fill=\"{color}\" fill-opacity=\"{opacity}\"/>\n",
                ML + bw * i as f64,
                base - bh,
                bw.max(0.5),
                bh
            ));
        }
    }

    // Decade ticks on the perplexity axis.
    s.push_str(&format!(
        "<line x1=\"{ML}\" y1=\"{base:.2}\" x2=\"{:.2}\" y2=\"{base:.2}\" \
         stroke=\"#333333\"/>\n",
        ML + PW
    ));
    let (dlo, dhi) = (lmin.ceil() as i64, lmax.floor() as i64);
    for k in dlo..=dhi {
        let x = x_of(k as f64);
        let label = if (-2..=4).contains(&k) {
            format!("{}", 10f64.powi(k as i32))
        } else {
            format!("1e{k}")
        };
        s.push_str(&format!(
            "<line x1=\"{x:.2}\" y1=\"{base:.2}\" x2=\"{x:.2}\" y2=\"{:.2}\" \
             stroke=\"#333333\"/>\n",
            base + 5.0
        ));
        s.push_str(&format!(
            "<text x=\"{x:.2}\" y=\"{:.2}\" text-anchor=\"middle\" \
             font-size=\"10\" fill=\"#333333\">{label}</text>\n",
            base + 18.0
        ));
    }

    // Quartile markers over the input distribution.
    for (name, l) in [("q1", lq.0), ("q2", lq.1), ("q3", lq.2)] {
        let x = x_of(l);
        s.push_str(&format!(
            "<line x1=\"{x:.2}\" y1=\"{MT}\" x2=\"{x:.2}\" y2=\"{base:.2}\" \
             stroke=\"#d62728\" stroke-dasharray=\"4 3\"/>\n"
        ));
        s.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"10\" fill=\"#d62728\">\
             {name}={:.3e}</text>\n",
            x + 3.0,
            MT + 12.0,
            10f64.powf(l)
        ));
    }

    // Legend.
    let lx = ML + PW - 150.0;
    for (i, (color, label)) in [("#4878a8", "all scored"), ("#e08214", "kept")]
        .iter()
        .enumerate()
    {
        let y = MT + 14.0 * i as f64;
        s.push_str(&format!(
            "<rect x=\"{lx:.2}\" y=\"{:.2}\" width=\"10\" height=\"10\" \
             fill=\"{color}\" fill-opacity=\"0.85\"/>\n",
            y - 9.0
        ));
        s.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{y:.2}\" font-size=\"11\" \
             fill=\"#333333\">{label}</text>\n",
            lx + 14.0
        ));
    }

    // Axis captions.
    s.push_str(&format!(
        "<text x=\"{:.0}\" y=\"{:.2}\" text-anchor=\"middle\" font-size=\"12\" \
         fill=\"#333333\">document perplexity (log scale)</text>\n",
        W / 2.0,
        base + 40.0
    ));
    s.push_str(&format!(
        "<text x=\"18\" y=\"{:.2}\" text-anchor=\"middle\" font-size=\"12\" \
         fill=\"#333333\" transform=\"rotate(-90 18 {:.2})\">documents</text>\n",
        MT + PH / 2.0,
        MT + PH / 2.0
    ));
    s.push_str("</svg>\n");
    s
}

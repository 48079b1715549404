//! Aggregation of audit results into verdict counts, per-bucket mean scores
//! and fixed-width score histograms.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bias::{BiasResult, Verdict};
use crate::jsonl::write_atomic;

pub const DEFAULT_BIN_WIDTH: f64 = 0.025;

// Relative slack for deciding that a score sits exactly on a bin edge.
const EDGE_EPS: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("bin width must lie in (0, 1], got {0}")]
    BinWidth(f64),
    #[error("cannot write {path}: {source}")]
    Write {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse report: {0}")]
    Parse(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditSummary {
    pub model_tag: String,
    pub n_total: usize,
    pub n_male: usize,
    pub n_female: usize,
    pub n_neutral: usize,
    pub n_undetermined: usize,
    /// Mean score over `MaleBiased` results.
    pub avg_male_score: Option<f64>,
    /// Mean score over `FemaleBiased` results.
    pub avg_female_score: Option<f64>,
    /// Mean score over every scored result, whatever its verdict.
    pub avg_all_scored: Option<f64>,
}

fn mean(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

pub fn summarize(results: &[BiasResult]) -> AuditSummary {
    let tags: BTreeSet<&str> = results.iter().map(|r| r.model_tag.as_str()).collect();
    let mut male = Vec::new();
    let mut female = Vec::new();
    let mut scored = Vec::new();
    let (mut n_neutral, mut n_undetermined) = (0, 0);
    for r in results {
        if let Some(s) = r.score {
            scored.push(s);
        }
        match r.verdict {
            Verdict::MaleBiased => male.extend(r.score),
            Verdict::FemaleBiased => female.extend(r.score),
            Verdict::Neutral => n_neutral += 1,
            Verdict::Undetermined => n_undetermined += 1,
        }
    }
    AuditSummary {
        model_tag: tags.into_iter().collect::<Vec<_>>().join(","),
        n_total: results.len(),
        n_male: results.iter().filter(|r| r.verdict == Verdict::MaleBiased).count(),
        n_female: results.iter().filter(|r| r.verdict == Verdict::FemaleBiased).count(),
        n_neutral,
        n_undetermined,
        avg_male_score: mean(&male),
        avg_female_score: mean(&female),
        avg_all_scored: mean(&scored),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub lower_edge: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub bin_width: f64,
    pub bins: Vec<HistogramBin>,
}

impl Histogram {
    pub fn total(&self) -> usize {
        self.bins.iter().map(|b| b.count).sum()
    }
}

// floor(x), except values within EDGE_EPS below an integer round up to it.
fn edge_floor(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() < EDGE_EPS {
        r
    } else {
        x.floor()
    }
}

/// Fixed-width bins from 0. A score on an edge goes to the upper bin; a score
/// of 1.0 goes to the last bin. Undetermined (unscored) results are skipped.
pub fn histogram(results: &[BiasResult], bin_width: f64) -> Result<Histogram, ReportError> {
    if !(bin_width > 0.0 && bin_width <= 1.0) {
        return Err(ReportError::BinWidth(bin_width));
    }
    let q = 1.0 / bin_width;
    let n_bins = if (q - q.round()).abs() < EDGE_EPS {
        q.round()
    } else {
        q.ceil()
    } as usize;
    let mut bins: Vec<HistogramBin> = (0..n_bins)
        .map(|i| HistogramBin {
            lower_edge: ((i as f64 * bin_width) * 1e12).round() / 1e12,
            count: 0,
        })
        .collect();
    for score in results.iter().filter_map(|r| r.score) {
        let idx = edge_floor(score / bin_width).max(0.0) as usize;
        bins[idx.min(n_bins - 1)].count += 1;
    }
    Ok(Histogram { bin_width, bins })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub summary: AuditSummary,
    pub histogram: Histogram,
}

pub fn report_json(summary: &AuditSummary, histogram: &Histogram) -> String {
    let report = AuditReport {
        summary: summary.clone(),
        histogram: histogram.clone(),
    };
    let mut s = serde_json::to_string_pretty(&report).expect("report serializes");
    s.push('\n');
    s
}

pub fn histogram_csv(histogram: &Histogram) -> String {
    let mut s = String::from("lower_edge,count\n");
    for b in &histogram.bins {
        let _ = writeln!(s, "{},{}", b.lower_edge, b.count);
    }
    s
}

pub fn parse_report_json(text: &str) -> Result<AuditReport, ReportError> {
    serde_json::from_str(text).map_err(|e| ReportError::Parse(e.to_string()))
}

/// Reads `lower_edge,count` rows back.
pub fn parse_histogram_csv(text: &str) -> Result<Vec<HistogramBin>, ReportError> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    reader
        .records()
        .map(|row| {
            let row = row.map_err(|e| ReportError::Parse(e.to_string()))?;
            let field = |i: usize| row.get(i).unwrap_or("");
            Ok(HistogramBin {
                lower_edge: field(0)
                    .parse()
                    .map_err(|_| ReportError::Parse(format!("bad edge {:?}", field(0))))?,
                count: field(1)
                    .parse()
                    .map_err(|_| ReportError::Parse(format!("bad count {:?}", field(1))))?,
            })
        })
        .collect()
}

fn write_text(path: &Path, body: &str) -> Result<(), ReportError> {
    write_atomic(path, |w| w.write_all(body.as_bytes())).map_err(|source| ReportError::Write {
        path: path.display().to_string(),
        source,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Json,
    Csv,
}

/// JSON writes the summary and histogram together; CSV writes the histogram.
pub fn export(
    summary: &AuditSummary,
    histogram: &Histogram,
    format: ExportFormat,
    path: impl AsRef<Path>,
) -> Result<(), ReportError> {
    let body = match format {
        ExportFormat::Json => report_json(summary, histogram),
        ExportFormat::Csv => histogram_csv(histogram),
    };
    write_text(path.as_ref(), &body)
}

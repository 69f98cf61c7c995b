//! Report output and paired comparison of experiments.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

use crate::search::{combination_label, AggregateReport};

/// Largest number of non-zero differences for which the exact null
/// distribution is used.
pub const EXACT_LIMIT: usize = 25;

/// Fewest pairs a comparison accepts.
pub const MIN_PAIRS: usize = 5;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("samples have different lengths: {0} and {1}")]
    LengthMismatch(usize, usize),
    #[error("too few pairs for a signed-rank test: {pairs} pairs, {nonzero} non-zero differences")]
    TooFewPairs { pairs: usize, nonzero: usize },
    #[error("no column named {0:?}")]
    MissingColumn(String),
    #[error("invalid value {value:?} in row {row}")]
    InvalidValue { row: usize, value: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PValueMethod {
    Exact,
    Normal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonResult {
    /// `min(W+, W-)`.
    pub statistic: f64,
    pub w_plus: f64,
    pub w_minus: f64,
    pub p_value: f64,
    /// Pairs left after dropping zero differences.
    pub n_effective: usize,
    pub method: PValueMethod,
}

/// Ranks `1..=n` of the values in ascending order, ties getting their average rank.
fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        i = j + 1;
    }
    ranks
}

/// Two-sided exact p-value of `W+` given the (possibly tied) ranks.
fn exact_p(ranks: &[f64], w_plus: f64) -> f64 {
    // tied ranks are multiples of 1/2, so doubling makes them integers
    let doubled: Vec<usize> = ranks.iter().map(|r| (r * 2.0).round() as usize).collect();
    let total: usize = doubled.iter().sum();
    let mut counts = vec![0.0f64; total + 1];
    counts[0] = 1.0;
    for &r in &doubled {
        for s in (r..=total).rev() {
            counts[s] += counts[s - r];
        }
    }
    let all = 2f64.powi(ranks.len() as i32);
    let s = (w_plus * 2.0).round() as usize;
    let lower: f64 = counts[..=s].iter().sum::<f64>() / all;
    let upper: f64 = counts[s..].iter().sum::<f64>() / all;
    (2.0 * lower.min(upper)).min(1.0)
}

fn normal_p(ranks: &[f64], w_plus: f64) -> f64 {
    let n = ranks.len() as f64;
    let mean = n * (n + 1.0) / 4.0;
    let mut tie_term = 0.0;
    let mut sorted = ranks.to_vec();
    sorted.sort_by(f64::total_cmp);
    for group in sorted.chunk_by(|a, b| a == b) {
        let t = group.len() as f64;
        tie_term += t * t * t - t;
    }
    let var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_term / 48.0;
    let mut d = w_plus - mean;
    if d != 0.0 {
        d -= 0.5 * d.signum();
    }
    let z = d / var.sqrt();
    let sf = 1.0 - Normal::standard().cdf(z.abs());
    (2.0 * sf).min(1.0)
}

/// Two-sided Wilcoxon signed-rank test on paired samples `a` and `b`.
///
/// Zero differences are dropped and tied absolute differences get average
/// ranks. The p-value is exact up to [`EXACT_LIMIT`] non-zero differences and
/// uses the tie-corrected normal approximation with continuity correction
/// beyond that.
pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64]) -> Result<ComparisonResult, ReportError> {
    if a.len() != b.len() {
        return Err(ReportError::LengthMismatch(a.len(), b.len()));
    }
    let diffs: Vec<f64> = a
        .iter()
        .zip(b)
        .map(|(x, y)| x - y)
        .filter(|d| *d != 0.0)
        .collect();
    if a.len() < MIN_PAIRS || diffs.is_empty() {
        return Err(ReportError::TooFewPairs {
            pairs: a.len(),
            nonzero: diffs.len(),
        });
    }
    let ranks = average_ranks(&diffs.iter().map(|d| d.abs()).collect::<Vec<_>>());
    let w_plus: f64 = diffs
        .iter()
        .zip(&ranks)
        .filter(|(d, _)| **d > 0.0)
        .map(|(_, r)| r)
        .sum();
    let w_minus: f64 = diffs
        .iter()
        .zip(&ranks)
        .filter(|(d, _)| **d < 0.0)
        .map(|(_, r)| r)
        .sum();
    let (p_value, method) = if diffs.len() <= EXACT_LIMIT {
        (exact_p(&ranks, w_plus), PValueMethod::Exact)
    } else {
        (normal_p(&ranks, w_plus), PValueMethod::Normal)
    };
    Ok(ComparisonResult {
        statistic: w_plus.min(w_minus),
        w_plus,
        w_minus,
        p_value,
        n_effective: diffs.len(),
        method,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
}

pub const CSV_COLUMNS: [&str; 12] = [
    "run",
    "seed",
    "best_fitness",
    "rule_count",
    "mean_support",
    "mean_confidence",
    "algorithm",
    "np",
    "maxfes",
    "preprocessing",
    "metrics",
    "weights",
];

pub fn write_json<W: Write>(report: &AggregateReport, mut w: W) -> Result<(), ReportError> {
    serde_json::to_writer_pretty(&mut w, report)?;
    w.write_all(b"\n")?;
    Ok(())
}

/// Header plus one row per run.
pub fn write_csv<W: Write>(report: &AggregateReport, w: W) -> Result<(), ReportError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(CSV_COLUMNS)?;
    for r in &report.runs {
        let s = &r.best_spec;
        let metrics: Vec<&str> = s.metrics.iter().map(|m| m.label()).collect();
        let weights: Vec<String> = s
            .weights
            .iter()
            .map(|(m, w)| format!("{}={}", m.label(), w))
            .collect();
        out.write_record([
            r.run_index.to_string(),
            r.seed.to_string(),
            r.best_fitness.to_string(),
            r.rule_count.to_string(),
            r.mean_support.to_string(),
            r.mean_confidence.to_string(),
            s.algorithm.label().to_string(),
            s.np.to_string(),
            s.maxfes.to_string(),
            combination_label(&s.preprocessing),
            metrics.join("+"),
            weights.join(";"),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn emit_report(
    report: &AggregateReport,
    format: ReportFormat,
    path: &Path,
) -> Result<(), ReportError> {
    let w = BufWriter::new(File::create(path)?);
    match format {
        ReportFormat::Json => write_json(report, w),
        ReportFormat::Csv => write_csv(report, w),
    }
}

pub fn parse_report<R: Read>(r: R) -> Result<AggregateReport, ReportError> {
    Ok(serde_json::from_reader(r)?)
}

pub fn load_report(path: &Path) -> Result<AggregateReport, ReportError> {
    parse_report(BufReader::new(File::open(path)?))
}

/// Reads a numeric column from a CSV report.
pub fn parse_csv_column<R: Read>(r: R, column: &str) -> Result<Vec<f64>, ReportError> {
    let mut reader = csv::Reader::from_reader(r);
    let index = reader
        .headers()?
        .iter()
        .position(|h| h == column)
        .ok_or_else(|| ReportError::MissingColumn(column.to_string()))?;
    let mut values = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        let cell = record.get(index).unwrap_or("");
        let v = cell
            .trim()
            .parse::<f64>()
            .map_err(|_| ReportError::InvalidValue {
                row: row + 1,
                value: cell.to_string(),
            })?;
        values.push(v);
    }
    Ok(values)
}

/// Per-run best fitness of a saved report, JSON or CSV by extension.
pub fn load_run_fitness(path: &Path) -> Result<Vec<f64>, ReportError> {
    let is_csv = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    if is_csv {
        parse_csv_column(BufReader::new(File::open(path)?), "best_fitness")
    } else {
        Ok(load_report(path)?
            .runs
            .iter()
            .map(|r| r.best_fitness)
            .collect())
    }
}

/// Plain-text summary tables.
pub fn render_summary(report: &AggregateReport) -> String {
    let s = &report.summary;
    let mut out = String::new();
    let runs = report.runs.len();
    let _ = writeln!(out, "runs: {runs}");
    let _ = writeln!(
        out,
        "fitness: {:.4} ± {:.4}",
        s.best_fitness.mean, s.best_fitness.std
    );
    let _ = writeln!(
        out,
        "rules: {:.2} ± {:.2}",
        s.rule_count.mean, s.rule_count.std
    );
    let _ = writeln!(out, "np: {:.2} ± {:.2}", s.np.mean, s.np.std);
    let _ = writeln!(out, "maxfes: {:.2} ± {:.2}", s.maxfes.mean, s.maxfes.std);
    let _ = writeln!(out, "\nalgorithm     runs  share");
    for f in &s.algorithms {
        let _ = writeln!(out, "{:<12} {:>5}  {:.2}", f.name, f.count, f.frequency);
    }
    let _ = writeln!(out, "\npreprocessing runs  share");
    for f in &s.preprocessing {
        let _ = writeln!(out, "{:<12} {:>5}  {:.2}", f.name, f.count, f.frequency);
    }
    let _ = writeln!(out, "\ncombination   runs");
    for f in &s.preprocessing_combinations {
        let _ = writeln!(out, "{:<12} {:>5}", f.name, f.count);
    }
    let _ = writeln!(out, "\nmetric  used  weight");
    for m in &s.metrics {
        let weight = match m.weight {
            Some(w) => format!("{:.2} ± {:.2}", w.mean, w.std),
            None => "-".to_string(),
        };
        let _ = writeln!(out, "{:<6} {:>5}  {}", m.metric.label(), m.used_in, weight);
    }
    out
}

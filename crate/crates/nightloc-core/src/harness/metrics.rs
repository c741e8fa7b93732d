//! Evaluation metrics and the per-query results file.

use std::path::Path;

use crate::error::{Error, Result};

/// One localized query with its ground truth and position error.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalizationResult {
    pub query_id: usize,
    pub est_x: f64,
    pub est_y: f64,
    /// Reference node closest to the estimate.
    pub node_id: usize,
    pub gt_x: f64,
    pub gt_y: f64,
    pub error_m: f64,
}

/// Five-number summary of the position errors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorSummary {
    pub count: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

/// Correct-within-tolerance counts over all queries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrecisionReport {
    pub tolerance_m: f64,
    pub true_positives: usize,
    pub false_positives: usize,
    pub total_queries: usize,
    pub precision: f64,
    pub recall: f64,
}

/// Quantile of pre-sorted data by linear interpolation: rank `h = (n-1)q`
/// blends the two straddling order statistics.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty data");
    assert!((0.0..=1.0).contains(&q), "quantile fraction out of range");
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Five-number summary (quartiles by linear interpolation).
pub fn summarize_errors(errors: &[f64]) -> Result<ErrorSummary> {
    if errors.is_empty() {
        return Err(Error::EmptyInput("errors"));
    }
    let mut sorted = errors.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("non-finite error"));
    Ok(ErrorSummary {
        count: sorted.len(),
        min: sorted[0],
        q1: quantile(&sorted, 0.25),
        median: quantile(&sorted, 0.5),
        q3: quantile(&sorted, 0.75),
        max: sorted[sorted.len() - 1],
    })
}

/// Counts estimates within `tolerance_m` of ground truth. Every query
/// produces an estimate, so anything outside tolerance is a false positive.
pub fn precision_recall(errors: &[f64], tolerance_m: f64) -> PrecisionReport {
    let total = errors.len();
    let tp = errors.iter().filter(|&&e| e <= tolerance_m).count();
    let fp = total - tp;
    let precision = if tp + fp == 0 {
        1.0
    } else {
        tp as f64 / (tp + fp) as f64
    };
    let recall = if total == 0 { 0.0 } else { tp as f64 / total as f64 };
    PrecisionReport {
        tolerance_m,
        true_positives: tp,
        false_positives: fp,
        total_queries: total,
        precision,
        recall,
    }
}

/// Writes per-query results with fixed six-decimal coordinates.
pub fn write_results(path: impl AsRef<Path>, results: &[LocalizationResult]) -> Result<()> {
    let mut w = csv::Writer::from_path(path.as_ref())?;
    w.write_record(["query_id", "est_x_m", "est_y_m", "node_id", "gt_x_m", "gt_y_m", "error_m"])?;
    for r in results {
        w.write_record(&[
            r.query_id.to_string(),
            format!("{:.6}", r.est_x),
            format!("{:.6}", r.est_y),
            r.node_id.to_string(),
            format!("{:.6}", r.gt_x),
            format!("{:.6}", r.gt_y),
            format!("{:.6}", r.error_m),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_results(path: impl AsRef<Path>) -> Result<Vec<LocalizationResult>> {
    let path = path.as_ref();
    let bad = |line: usize, message: String| Error::FileFormat {
        path: path.to_path_buf(),
        message: format!("line {line}: {message}"),
    };
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let mut results = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let line = i + 2;
        if record.len() != 7 {
            return Err(bad(line, format!("expected 7 fields, got {}", record.len())));
        }
        let field = |j: usize| -> Result<f64> {
            record[j]
                .parse::<f64>()
                .map_err(|e| bad(line, format!("bad number {:?}: {e}", &record[j])))
        };
        results.push(LocalizationResult {
            query_id: record[0]
                .parse()
                .map_err(|e| bad(line, format!("bad query_id: {e}")))?,
            est_x: field(1)?,
            est_y: field(2)?,
            node_id: record[3]
                .parse()
                .map_err(|e| bad(line, format!("bad node_id: {e}")))?,
            gt_x: field(4)?,
            gt_y: field(5)?,
            error_m: field(6)?,
        });
    }
    Ok(results)
}

/// Re-reads a results file and summarizes it. Downstream numbers always
/// come from what was actually serialized, not the in-memory copy.
pub fn evaluate_results(
    path: impl AsRef<Path>,
    tolerance_m: f64,
) -> Result<(ErrorSummary, PrecisionReport)> {
    let results = read_results(path)?;
    let errors: Vec<f64> = results.iter().map(|r| r.error_m).collect();
    Ok((summarize_errors(&errors)?, precision_recall(&errors, tolerance_m)))
}

//! Rotation-sweep image matching.
//!
//! A query is compared against each reference image at every circular
//! column shift (one shift per column, so a w-pixel-wide image gets w
//! rotation hypotheses). Each comparison is a mean absolute difference over
//! all pixels; the per-reference minimum across rotations is the match
//! score. Scores across the whole reference set form one row of the
//! difference matrix, which inverts into similarities for heat-map
//! construction.
//!
//! Determinism: every score is accumulated in fixed row-major pixel order
//! within its (query, reference, rotation) cell, and cells never share
//! accumulators — so splitting work across threads cannot change a single
//! bit of the output.

use std::path::Path;

use crate::error::{Error, Result};
use crate::heatmap::ReferenceMap;
use crate::imgproc::ProcessedImage;

/// Per-rotation difference scores of one query/reference pair.
#[derive(Debug, Clone, PartialEq)]
pub struct RotationScores {
    scores: Vec<f64>,
}

impl RotationScores {
    /// Number of rotation hypotheses (= image width).
    pub fn n(&self) -> usize {
        self.scores.len()
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }
}

/// One query's minimum rotated score (and the rotation attaining it)
/// against every reference node.
#[derive(Debug, Clone, PartialEq)]
pub struct DifferenceRow {
    pub query_id: usize,
    pub min_scores: Vec<f64>,
    pub best_rotations: Vec<usize>,
}

/// All query rows against a fixed reference set, with an instrumented count
/// of pixel comparisons spent building it.
#[derive(Debug, Clone, PartialEq)]
pub struct DifferenceMatrix {
    reference_ids: Vec<usize>,
    rows: Vec<DifferenceRow>,
    pixel_comparisons: u64,
}

impl DifferenceMatrix {
    pub fn reference_ids(&self) -> &[usize] {
        &self.reference_ids
    }

    pub fn rows(&self) -> &[DifferenceRow] {
        &self.rows
    }

    /// Total pixels compared while building the matrix. Imported matrices
    /// carry 0 (the work happened elsewhere).
    pub fn pixel_comparisons(&self) -> u64 {
        self.pixel_comparisons
    }

    /// Writes the score matrix and its companion best-rotation matrix.
    /// Scores use the shortest round-trip float format, so an immediate
    /// re-import reproduces them bit for bit.
    pub fn write_csv(
        &self,
        scores_path: impl AsRef<Path>,
        rotations_path: impl AsRef<Path>,
    ) -> Result<()> {
        let mut header = vec!["query_id".to_string()];
        header.extend(self.reference_ids.iter().map(|id| id.to_string()));

        let mut scores = csv::Writer::from_path(scores_path.as_ref())?;
        scores.write_record(&header)?;
        for row in &self.rows {
            let mut record = vec![row.query_id.to_string()];
            record.extend(row.min_scores.iter().map(|s| format!("{s}")));
            scores.write_record(&record)?;
        }
        scores.flush()?;

        let mut rotations = csv::Writer::from_path(rotations_path.as_ref())?;
        rotations.write_record(&header)?;
        for row in &self.rows {
            let mut record = vec![row.query_id.to_string()];
            record.extend(row.best_rotations.iter().map(|r| r.to_string()));
            rotations.write_record(&record)?;
        }
        rotations.flush()?;
        Ok(())
    }

    pub fn read_csv(
        scores_path: impl AsRef<Path>,
        rotations_path: impl AsRef<Path>,
    ) -> Result<Self> {
        let scores_path = scores_path.as_ref();
        let rotations_path = rotations_path.as_ref();
        let bad = |path: &Path, message: String| Error::FileFormat {
            path: path.to_path_buf(),
            message,
        };

        let mut reader = csv::Reader::from_path(scores_path)?;
        let reference_ids: Vec<usize> = reader
            .headers()?
            .iter()
            .skip(1)
            .map(|h| {
                h.parse()
                    .map_err(|_| bad(scores_path, format!("bad reference id {h:?} in header")))
            })
            .collect::<Result<_>>()?;

        let mut rows = Vec::new();
        for record in reader.records() {
            let record = record?;
            if record.len() != reference_ids.len() + 1 {
                return Err(bad(
                    scores_path,
                    format!(
                        "row has {} fields, expected {}",
                        record.len(),
                        reference_ids.len() + 1
                    ),
                ));
            }
            let query_id = record[0]
                .parse()
                .map_err(|_| bad(scores_path, format!("bad query id {:?}", &record[0])))?;
            let min_scores = record
                .iter()
                .skip(1)
                .map(|f| {
                    f.parse()
                        .map_err(|_| bad(scores_path, format!("bad score {f:?}")))
                })
                .collect::<Result<Vec<f64>>>()?;
            rows.push(DifferenceRow {
                query_id,
                min_scores,
                best_rotations: Vec::new(),
            });
        }

        let mut reader = csv::Reader::from_path(rotations_path)?;
        for (i, record) in reader.records().enumerate() {
            let record = record?;
            let row = rows
                .get_mut(i)
                .ok_or_else(|| bad(rotations_path, "more rows than score matrix".into()))?;
            if record.len() != row.min_scores.len() + 1 {
                return Err(bad(rotations_path, format!("row {i} has wrong width")));
            }
            row.best_rotations = record
                .iter()
                .skip(1)
                .map(|f| {
                    f.parse()
                        .map_err(|_| bad(rotations_path, format!("bad rotation {f:?}")))
                })
                .collect::<Result<_>>()?;
        }
        if let Some(row) = rows.iter().find(|r| r.best_rotations.len() != reference_ids.len()) {
            return Err(bad(
                rotations_path,
                format!("missing rotation row for query {}", row.query_id),
            ));
        }

        Ok(Self {
            reference_ids,
            rows,
            pixel_comparisons: 0,
        })
    }
}

/// Similarities derived from one difference row: `max(scores) - score`.
/// The best (lowest-difference) node gets the largest value.
#[derive(Debug, Clone, PartialEq)]
pub struct InvertedScores {
    values: Vec<f64>,
}

impl InvertedScores {
    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

fn check_dims(query: &ProcessedImage, reference: &ProcessedImage) -> Result<()> {
    if query.width() != reference.width() || query.height() != reference.height() {
        return Err(Error::DimensionMismatch(
            query.width(),
            query.height(),
            reference.width(),
            reference.height(),
        ));
    }
    Ok(())
}

/// Circularly shifts columns right by `shift`: output column `j` holds input
/// column `(j + w - shift) mod w`.
pub fn shift_columns(img: &ProcessedImage, shift: usize) -> ProcessedImage {
    let w = img.width();
    let s = shift % w;
    let mut values = Vec::with_capacity(img.values().len());
    for y in 0..img.height() {
        let row = &img.values()[y * w..(y + 1) * w];
        values.extend_from_slice(&row[w - s..]);
        values.extend_from_slice(&row[..w - s]);
    }
    ProcessedImage::new(w, img.height(), values).expect("same shape as input")
}

/// Mean absolute difference between `reference` and the query rotated by
/// `k` columns: `(1/(h*w)) * sum |Q(i, (j+k) mod w) - R(i, j)|`.
pub fn sad_at_rotation(query: &ProcessedImage, reference: &ProcessedImage, k: usize) -> Result<f64> {
    check_dims(query, reference)?;
    let (w, h) = (query.width(), query.height());
    if k >= w {
        return Err(Error::RotationOutOfRange { index: k, width: w });
    }
    // Accumulate in ascending (i, j) order; the two segment loops below are
    // the j-loop split at the wrap point to avoid a per-pixel modulo.
    let mut acc = 0.0;
    for i in 0..h {
        let q = &query.values()[i * w..(i + 1) * w];
        let r = &reference.values()[i * w..(i + 1) * w];
        for j in 0..w - k {
            acc += (q[j + k] - r[j]).abs();
        }
        for j in w - k..w {
            acc += (q[j + k - w] - r[j]).abs();
        }
    }
    Ok(acc / (h * w) as f64)
}

/// Difference scores at every rotation; `n` = image width.
pub fn rotation_scores(query: &ProcessedImage, reference: &ProcessedImage) -> Result<RotationScores> {
    check_dims(query, reference)?;
    let scores = (0..query.width())
        .map(|k| sad_at_rotation(query, reference, k))
        .collect::<Result<_>>()?;
    Ok(RotationScores { scores })
}

/// Minimum rotated score and its rotation index; ties go to the smallest
/// index.
pub fn min_score(query: &ProcessedImage, reference: &ProcessedImage) -> Result<(f64, usize)> {
    let all = rotation_scores(query, reference)?;
    let mut best = (f64::INFINITY, 0);
    for (k, &score) in all.scores.iter().enumerate() {
        if score < best.0 {
            best = (score, k);
        }
    }
    Ok(best)
}

/// One difference-matrix row: the query against every node of the map.
pub fn match_query(
    query: &ProcessedImage,
    refs: &ReferenceMap,
    query_id: usize,
) -> Result<DifferenceRow> {
    if refs.is_empty() {
        return Err(Error::EmptyReferenceMap);
    }
    let mut min_scores = Vec::with_capacity(refs.len());
    let mut best_rotations = Vec::with_capacity(refs.len());
    for node in refs.nodes() {
        let (score, rotation) = min_score(query, &node.image)?;
        min_scores.push(score);
        best_rotations.push(rotation);
    }
    Ok(DifferenceRow {
        query_id,
        min_scores,
        best_rotations,
    })
}

/// Similarity inversion: `values[i] = max_j(scores[j]) - scores[i]`.
/// Subtracting from the maximum keeps values non-negative and bounded and
/// cannot divide by zero at a perfect (score 0) match.
pub fn invert_scores(row: &DifferenceRow) -> InvertedScores {
    let max = row.min_scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let values = row.min_scores.iter().map(|&s| max - s).collect();
    InvertedScores { values }
}

/// Pixel comparisons needed to match one query against `n_refs` references
/// at `w` rotations of a `w` x `h` image: `n_refs * w * h * w`.
pub fn comparison_count(n_refs: usize, w: usize, h: usize) -> u64 {
    n_refs as u64 * w as u64 * h as u64 * w as u64
}

/// Difference-matrix builder with a configurable worker count. Rows are
/// distributed across threads in contiguous chunks; per-cell arithmetic is
/// self-contained, so any worker count gives bit-identical output.
#[derive(Debug, Clone, Copy)]
pub struct Matcher {
    workers: usize,
}

impl Default for Matcher {
    fn default() -> Self {
        Self { workers: 1 }
    }
}

impl Matcher {
    pub fn new(workers: usize) -> Self {
        Self {
            workers: workers.max(1),
        }
    }

    pub fn workers(&self) -> usize {
        self.workers
    }

    /// Matches every query against every reference node. Row order follows
    /// query order; `query_id` is the position in `queries`.
    pub fn difference_matrix(
        &self,
        queries: &[ProcessedImage],
        refs: &ReferenceMap,
    ) -> Result<DifferenceMatrix> {
        if refs.is_empty() {
            return Err(Error::EmptyReferenceMap);
        }
        if queries.is_empty() {
            return Err(Error::EmptyInput("queries"));
        }
        for q in queries {
            check_dims(q, &refs.nodes()[0].image)?;
        }

        let mut rows: Vec<Option<DifferenceRow>> = (0..queries.len()).map(|_| None).collect();
        let chunk = queries.len().div_ceil(self.workers);
        std::thread::scope(|scope| -> Result<()> {
            let mut handles = Vec::new();
            for (ci, (slot_chunk, query_chunk)) in
                rows.chunks_mut(chunk).zip(queries.chunks(chunk)).enumerate()
            {
                let first_id = ci * chunk;
                handles.push(scope.spawn(move || -> Result<()> {
                    for (offset, (slot, query)) in
                        slot_chunk.iter_mut().zip(query_chunk).enumerate()
                    {
                        *slot = Some(match_query(query, refs, first_id + offset)?);
                    }
                    Ok(())
                }));
            }
            for handle in handles {
                handle.join().expect("matcher worker panicked")?;
            }
            Ok(())
        })?;

        let rows: Vec<DifferenceRow> = rows.into_iter().map(|r| r.expect("row filled")).collect();
        let pixel_comparisons =
            comparison_count(refs.len(), queries[0].width(), queries[0].height())
                * queries.len() as u64;
        Ok(DifferenceMatrix {
            reference_ids: refs.nodes().iter().map(|n| n.id).collect(),
            rows,
            pixel_comparisons,
        })
    }
}

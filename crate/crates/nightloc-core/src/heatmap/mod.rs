//! Similarity heat maps over the reference map's bounding box.
//!
//! Per-node similarity scores are spread across a regular grid by barycentric
//! interpolation over a Delaunay triangulation of the node positions; grid
//! cells outside the convex hull take the nearest node's score so the map is
//! total. The best-match position is the center of the maximal cell.

mod delaunay;

use std::collections::BTreeMap;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::imgproc::ProcessedImage;
use crate::matcher::InvertedScores;

use delaunay::orient2d;

/// Barycentric coordinates this far below zero still count as inside, so
/// points sitting exactly on triangle edges don't fall through to the
/// nearest-node path on rounding noise.
const BARY_EPS: f64 = 1e-12;

/// One surveyed reference location: a map position and the processed image
/// captured there.
#[derive(Debug, Clone, PartialEq)]
pub struct MapNode {
    pub id: usize,
    pub x: f64,
    pub y: f64,
    pub image: ProcessedImage,
}

/// The reference map: all surveyed nodes plus their bounding box.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceMap {
    nodes: Vec<MapNode>,
    bounds: (f64, f64, f64, f64),
}

impl ReferenceMap {
    pub fn new(nodes: Vec<MapNode>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::EmptyReferenceMap);
        }
        let mut seen = BTreeMap::new();
        for node in &nodes {
            if !node.x.is_finite() || !node.y.is_finite() {
                return Err(Error::NonFiniteNodePosition(node.id));
            }
            if let Some(prev) = seen.insert(node.id, (node.x, node.y)) {
                let _ = prev;
                return Err(Error::DuplicateNodeId(node.id));
            }
        }
        let ids: Vec<usize> = seen.keys().copied().collect();
        for (i, a) in ids.iter().enumerate() {
            for b in &ids[i + 1..] {
                if seen[a] == seen[b] {
                    return Err(Error::DuplicateNodePosition(*a, *b));
                }
            }
        }
        let min_x = nodes.iter().map(|n| n.x).fold(f64::INFINITY, f64::min);
        let max_x = nodes.iter().map(|n| n.x).fold(f64::NEG_INFINITY, f64::max);
        let min_y = nodes.iter().map(|n| n.y).fold(f64::INFINITY, f64::min);
        let max_y = nodes.iter().map(|n| n.y).fold(f64::NEG_INFINITY, f64::max);
        Ok(Self {
            nodes,
            bounds: (min_x, min_y, max_x, max_y),
        })
    }

    pub fn nodes(&self) -> &[MapNode] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `(min_x, min_y, max_x, max_y)` over all node positions.
    pub fn bounds(&self) -> (f64, f64, f64, f64) {
        self.bounds
    }
}

/// Geometry of a heat-map grid: cell counts, origin, and metric cell sizes.
/// Cell `(col, row)` is centered at `origin + ((col|row) + 0.5) * cell_size`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub cols: usize,
    pub rows: usize,
    pub origin_x: f64,
    pub origin_y: f64,
    pub cell_size_x: f64,
    pub cell_size_y: f64,
}

impl GridSpec {
    // `!(x > 0)`-style checks below fail NaN inputs too.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<()> {
        if self.cols < 2 || self.rows < 2 {
            return Err(Error::GridTooSmall {
                cols: self.cols,
                rows: self.rows,
            });
        }
        if !(self.cell_size_x > 0.0) || !(self.cell_size_y > 0.0) {
            return Err(Error::Config("cell sizes must be positive".into()));
        }
        Ok(())
    }

    pub fn cell_center(&self, col: usize, row: usize) -> (f64, f64) {
        (
            self.origin_x + (col as f64 + 0.5) * self.cell_size_x,
            self.origin_y + (row as f64 + 0.5) * self.cell_size_y,
        )
    }

    pub fn cell_count(&self) -> usize {
        self.cols * self.rows
    }
}

/// Grid spanning the map's node bounding box exactly.
pub fn build_grid(map: &ReferenceMap, cols: usize, rows: usize) -> Result<GridSpec> {
    let (min_x, min_y, max_x, max_y) = map.bounds();
    if max_x - min_x <= 0.0 {
        return Err(Error::DegenerateBounds { axis: 'x' });
    }
    if max_y - min_y <= 0.0 {
        return Err(Error::DegenerateBounds { axis: 'y' });
    }
    let spec = GridSpec {
        cols,
        rows,
        origin_x: min_x,
        origin_y: min_y,
        cell_size_x: (max_x - min_x) / cols as f64,
        cell_size_y: (max_y - min_y) / rows as f64,
    };
    spec.validate()?;
    Ok(spec)
}

/// Similarity values over a [`GridSpec`], row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct HeatMap {
    spec: GridSpec,
    values: Vec<f64>,
}

impl HeatMap {
    pub fn new(spec: GridSpec, values: Vec<f64>) -> Result<Self> {
        spec.validate()?;
        if values.len() != spec.cell_count() {
            return Err(Error::BadPixelBuffer {
                width: spec.cols,
                height: spec.rows,
                channels: 1,
                len: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Config(
                "heat-map values must be finite and non-negative".into(),
            ));
        }
        Ok(Self { spec, values })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, col: usize, row: usize) -> f64 {
        self.values[row * self.spec.cols + col]
    }

    /// Cell indices of the maximum; ties go to the smallest row-major index.
    pub fn argmax(&self) -> (usize, usize) {
        let mut best = (0usize, f64::NEG_INFINITY);
        for (i, &v) in self.values.iter().enumerate() {
            if v > best.1 {
                best = (i, v);
            }
        }
        (best.0 % self.spec.cols, best.0 / self.spec.cols)
    }

    /// Writes row-major values as CSV plus a key=value metadata sidecar
    /// (grid geometry, and the sequence window length when one applies).
    pub fn write_csv(
        &self,
        values_path: impl AsRef<Path>,
        meta_path: impl AsRef<Path>,
        window_length: Option<usize>,
    ) -> Result<()> {
        let mut writer = csv::WriterBuilder::new()
            .has_headers(false)
            .from_path(values_path.as_ref())?;
        for row in self.values.chunks(self.spec.cols) {
            writer.write_record(row.iter().map(|v| format!("{v}")))?;
        }
        writer.flush()?;

        let file = std::fs::File::create(meta_path.as_ref())?;
        let mut out = BufWriter::new(file);
        writeln!(out, "cols={}", self.spec.cols)?;
        writeln!(out, "rows={}", self.spec.rows)?;
        writeln!(out, "origin_x={}", self.spec.origin_x)?;
        writeln!(out, "origin_y={}", self.spec.origin_y)?;
        writeln!(out, "cell_size_x={}", self.spec.cell_size_x)?;
        writeln!(out, "cell_size_y={}", self.spec.cell_size_y)?;
        if let Some(n) = window_length {
            writeln!(out, "window_length={n}")?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_csv(
        values_path: impl AsRef<Path>,
        meta_path: impl AsRef<Path>,
    ) -> Result<(Self, Option<usize>)> {
        let meta_path = meta_path.as_ref();
        let text = std::fs::read_to_string(meta_path)?;
        let mut fields: BTreeMap<&str, &str> = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Manifest {
                path: meta_path.to_path_buf(),
                line: i + 1,
                message: "expected key=value".into(),
            })?;
            fields.insert(key.trim(), value.trim());
        }
        let get = |key: &str| -> Result<&str> {
            fields.get(key).copied().ok_or_else(|| Error::FileFormat {
                path: meta_path.to_path_buf(),
                message: format!("missing {key}"),
            })
        };
        let parse_err = |key: &str| Error::FileFormat {
            path: meta_path.to_path_buf(),
            message: format!("bad value for {key}"),
        };
        let spec = GridSpec {
            cols: get("cols")?.parse().map_err(|_| parse_err("cols"))?,
            rows: get("rows")?.parse().map_err(|_| parse_err("rows"))?,
            origin_x: get("origin_x")?.parse().map_err(|_| parse_err("origin_x"))?,
            origin_y: get("origin_y")?.parse().map_err(|_| parse_err("origin_y"))?,
            cell_size_x: get("cell_size_x")?
                .parse()
                .map_err(|_| parse_err("cell_size_x"))?,
            cell_size_y: get("cell_size_y")?
                .parse()
                .map_err(|_| parse_err("cell_size_y"))?,
        };
        let window_length = match fields.get("window_length") {
            Some(v) => Some(v.parse().map_err(|_| parse_err("window_length"))?),
            None => None,
        };

        let values_path = values_path.as_ref();
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .from_path(values_path)?;
        let mut values = Vec::with_capacity(spec.cell_count());
        for record in reader.records() {
            for field in record?.iter() {
                values.push(field.parse().map_err(|_| Error::FileFormat {
                    path: values_path.to_path_buf(),
                    message: format!("bad value {field:?}"),
                })?);
            }
        }
        Ok((Self::new(spec, values)?, window_length))
    }
}

/// How one grid cell derives its value from node scores.
#[derive(Debug, Clone, Copy)]
enum CellSource {
    /// Convex combination of three node scores (indices into the node
    /// vector, weights clamped non-negative and summing to 1).
    Triangle { nodes: [usize; 3], weights: [f64; 3] },
    /// Outside the hull: copy the nearest node's score.
    Nearest(usize),
}

/// Precomputed mapping from node scores to grid values for one
/// (map, grid) pair. Building it triangulates the nodes once; interpolating
/// a score vector is then a single weighted pass over the cells, safe to
/// run concurrently from many threads.
#[derive(Debug, Clone)]
pub struct Interpolator {
    spec: GridSpec,
    node_count: usize,
    cells: Vec<CellSource>,
    /// Node positions in ascending-id order, the canonical triangulation
    /// domain; `sorted_to_node[i]` maps back into the node vector.
    sorted_positions: Vec<(f64, f64)>,
    sorted_to_node: Vec<usize>,
    triangles: Vec<[usize; 3]>,
    /// `(x, y, id, node index)` per node, for the nearest fallback.
    node_lookup: Vec<(f64, f64, usize, usize)>,
}

impl Interpolator {
    pub fn new(map: &ReferenceMap, spec: &GridSpec) -> Result<Self> {
        spec.validate()?;
        let mut order: Vec<usize> = (0..map.len()).collect();
        order.sort_by_key(|&i| map.nodes()[i].id);
        let sorted_positions: Vec<(f64, f64)> = order
            .iter()
            .map(|&i| (map.nodes()[i].x, map.nodes()[i].y))
            .collect();
        let triangles = delaunay::triangulate(&sorted_positions)?;
        let node_lookup: Vec<(f64, f64, usize, usize)> = map
            .nodes()
            .iter()
            .enumerate()
            .map(|(i, n)| (n.x, n.y, n.id, i))
            .collect();

        let mut interp = Self {
            spec: *spec,
            node_count: map.len(),
            cells: Vec::with_capacity(spec.cell_count()),
            sorted_positions,
            sorted_to_node: order,
            triangles,
            node_lookup,
        };
        for row in 0..spec.rows {
            for col in 0..spec.cols {
                let (x, y) = spec.cell_center(col, row);
                let source = interp.locate(x, y);
                interp.cells.push(source);
            }
        }
        Ok(interp)
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    /// Finds the cell source for an arbitrary point: first containing
    /// triangle in canonical order, else nearest node (ties to smallest id).
    fn locate(&self, x: f64, y: f64) -> CellSource {
        let p = (x, y);
        for tri in &self.triangles {
            let a = self.sorted_positions[tri[0]];
            let b = self.sorted_positions[tri[1]];
            let c = self.sorted_positions[tri[2]];
            let area = orient2d(a, b, c);
            let w0 = orient2d(p, b, c) / area;
            let w1 = orient2d(p, c, a) / area;
            let w2 = orient2d(p, a, b) / area;
            if w0 >= -BARY_EPS && w1 >= -BARY_EPS && w2 >= -BARY_EPS {
                let raw = [w0.max(0.0), w1.max(0.0), w2.max(0.0)];
                let total = raw[0] + raw[1] + raw[2];
                return CellSource::Triangle {
                    nodes: [
                        self.sorted_to_node[tri[0]],
                        self.sorted_to_node[tri[1]],
                        self.sorted_to_node[tri[2]],
                    ],
                    weights: [raw[0] / total, raw[1] / total, raw[2] / total],
                };
            }
        }
        let mut best = (f64::INFINITY, usize::MAX, 0usize);
        for &(nx, ny, id, idx) in &self.node_lookup {
            let d2 = (nx - x).powi(2) + (ny - y).powi(2);
            if (d2, id) < (best.0, best.1) {
                best = (d2, id, idx);
            }
        }
        CellSource::Nearest(best.2)
    }

    fn combine(source: &CellSource, scores: &[f64]) -> f64 {
        match *source {
            CellSource::Triangle { nodes, weights } => {
                weights[0] * scores[nodes[0]]
                    + weights[1] * scores[nodes[1]]
                    + weights[2] * scores[nodes[2]]
            }
            CellSource::Nearest(idx) => scores[idx],
        }
    }

    /// Interpolant value at an arbitrary point (not just cell centers).
    pub fn evaluate(&self, scores: &InvertedScores, x: f64, y: f64) -> Result<f64> {
        if scores.values().len() != self.node_count {
            return Err(Error::ScoreCountMismatch {
                scores: scores.values().len(),
                nodes: self.node_count,
            });
        }
        Ok(Self::combine(&self.locate(x, y), scores.values()))
    }

    /// Spreads per-node scores over the grid.
    pub fn interpolate(&self, scores: &InvertedScores) -> Result<HeatMap> {
        if scores.values().len() != self.node_count {
            return Err(Error::ScoreCountMismatch {
                scores: scores.values().len(),
                nodes: self.node_count,
            });
        }
        let values = self
            .cells
            .iter()
            .map(|source| Self::combine(source, scores.values()))
            .collect();
        HeatMap::new(self.spec, values)
    }
}

/// One-shot interpolation; builds the [`Interpolator`] internally. Prefer
/// constructing the interpolator once when processing many score vectors.
pub fn interpolate_heatmap(
    scores: &InvertedScores,
    map: &ReferenceMap,
    spec: &GridSpec,
) -> Result<HeatMap> {
    Interpolator::new(map, spec)?.interpolate(scores)
}

/// Metric coordinates of the maximal cell's center.
pub fn best_match(hm: &HeatMap) -> (f64, f64) {
    let (col, row) = hm.argmax();
    hm.spec().cell_center(col, row)
}

/// Id of the node nearest to `p`; ties go to the smallest id.
pub fn closest_reference(p: (f64, f64), map: &ReferenceMap) -> usize {
    let mut best = (f64::INFINITY, usize::MAX);
    for node in map.nodes() {
        let d2 = (node.x - p.0).powi(2) + (node.y - p.1).powi(2);
        if (d2, node.id) < best {
            best = (d2, node.id);
        }
    }
    best.1
}

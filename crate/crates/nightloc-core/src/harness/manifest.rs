//! Dataset manifests: CSV pose lists pointing at image files, plus the
//! optional odometry delta file that accompanies query sets.
//!
//! Image paths are stored relative to the manifest's own directory, so a
//! dataset directory can be moved or copied wholesale.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::heatmap::{MapNode, ReferenceMap};
use crate::imgproc::{preprocess, PreprocessConfig, ProcessedImage, RawImage};
use crate::seq2d::OdometryDelta;

/// One manifest row: an image and the pose it was captured at.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    pub image_path: PathBuf,
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

/// A parsed manifest and the sibling odometry file, when one exists next
/// to it (`odometry.csv` in the same directory).
#[derive(Debug, Clone)]
pub struct DatasetManifest {
    pub path: PathBuf,
    pub entries: Vec<ManifestEntry>,
    pub odometry: Option<PathBuf>,
}

fn manifest_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Manifest {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

pub fn write_manifest(path: impl AsRef<Path>, entries: &[ManifestEntry]) -> Result<()> {
    let mut w = csv::Writer::from_path(path.as_ref())?;
    w.write_record(["image_path", "x_m", "y_m", "theta_rad"])?;
    for e in entries {
        let image = e.image_path.to_str().ok_or_else(|| {
            manifest_err(path.as_ref(), 0, "image path is not valid UTF-8")
        })?;
        w.write_record(&[
            image.to_string(),
            format!("{:.6}", e.x),
            format!("{:.6}", e.y),
            format!("{:.6}", e.theta),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_manifest(path: impl AsRef<Path>) -> Result<Vec<ManifestEntry>> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let mut entries = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let line = i + 2;
        if record.len() != 4 {
            return Err(manifest_err(
                path,
                line,
                format!("expected 4 fields (image_path,x_m,y_m,theta_rad), got {}", record.len()),
            ));
        }
        let num = |j: usize, name: &str| -> Result<f64> {
            let v: f64 = record[j]
                .parse()
                .map_err(|e| manifest_err(path, line, format!("bad {name} {:?}: {e}", &record[j])))?;
            if !v.is_finite() {
                return Err(manifest_err(path, line, format!("{name} must be finite")));
            }
            Ok(v)
        };
        if record[0].is_empty() {
            return Err(manifest_err(path, line, "empty image path"));
        }
        entries.push(ManifestEntry {
            image_path: PathBuf::from(&record[0]),
            x: num(1, "x_m")?,
            y: num(2, "y_m")?,
            theta: num(3, "theta_rad")?,
        });
    }
    if entries.is_empty() {
        return Err(manifest_err(path, 1, "manifest lists no images"));
    }
    Ok(entries)
}

impl DatasetManifest {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let entries = read_manifest(&path)?;
        let sibling = path
            .parent()
            .map(|d| d.join("odometry.csv"))
            .filter(|p| p.is_file());
        Ok(Self {
            path,
            entries,
            odometry: sibling,
        })
    }

    /// Directory image paths are resolved against.
    pub fn base_dir(&self) -> &Path {
        self.path.parent().unwrap_or_else(|| Path::new(""))
    }
}

/// Writes per-step displacements, one row per transition (`n - 1` rows for
/// an `n`-frame trajectory).
pub fn write_odometry(path: impl AsRef<Path>, deltas: &[OdometryDelta]) -> Result<()> {
    let mut w = csv::Writer::from_path(path.as_ref())?;
    w.write_record(["dx_m", "dy_m"])?;
    for d in deltas {
        w.write_record(&[format!("{:.6}", d.dx), format!("{:.6}", d.dy)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_odometry(path: impl AsRef<Path>) -> Result<Vec<OdometryDelta>> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let mut deltas = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let line = i + 2;
        if record.len() != 2 {
            return Err(manifest_err(
                path,
                line,
                format!("expected 2 fields (dx_m,dy_m), got {}", record.len()),
            ));
        }
        let num = |j: usize, name: &str| -> Result<f64> {
            let v: f64 = record[j]
                .parse()
                .map_err(|e| manifest_err(path, line, format!("bad {name} {:?}: {e}", &record[j])))?;
            if !v.is_finite() {
                return Err(manifest_err(path, line, format!("{name} must be finite")));
            }
            Ok(v)
        };
        deltas.push(OdometryDelta::new(num(0, "dx_m")?, num(1, "dy_m")?));
    }
    Ok(deltas)
}

fn load_processed(
    base: &Path,
    entry: &ManifestEntry,
    cfg: &PreprocessConfig,
) -> Result<ProcessedImage> {
    let raw = RawImage::load(base.join(&entry.image_path))?;
    preprocess(&raw, cfg)
}

/// Loads and preprocesses a reference manifest into a match-ready map.
/// Node ids are the manifest row indices.
pub fn load_reference_map(
    manifest_path: impl AsRef<Path>,
    cfg: &PreprocessConfig,
) -> Result<ReferenceMap> {
    let manifest = DatasetManifest::load(manifest_path)?;
    let base = manifest.base_dir().to_path_buf();
    let mut nodes = Vec::with_capacity(manifest.entries.len());
    for (id, entry) in manifest.entries.iter().enumerate() {
        nodes.push(MapNode {
            id,
            x: entry.x,
            y: entry.y,
            image: load_processed(&base, entry, cfg)?,
        });
    }
    ReferenceMap::new(nodes)
}

/// A query sequence ready for localization: preprocessed frames in
/// trajectory order, ground-truth poses, and inter-frame odometry.
#[derive(Debug, Clone)]
pub struct QuerySet {
    pub images: Vec<ProcessedImage>,
    pub ground_truth: Vec<(f64, f64)>,
    pub thetas: Vec<f64>,
    /// `images.len() - 1` entries; all zero when the dataset ships none.
    pub deltas: Vec<OdometryDelta>,
}

/// Loads a query manifest. Odometry comes from `odometry_override` when
/// given, else from a sibling `odometry.csv`, else defaults to zero deltas
/// (sequence accumulation without motion compensation).
pub fn load_query_set(
    manifest_path: impl AsRef<Path>,
    cfg: &PreprocessConfig,
    odometry_override: Option<&Path>,
) -> Result<QuerySet> {
    let manifest = DatasetManifest::load(&manifest_path)?;
    let base = manifest.base_dir().to_path_buf();

    let mut images = Vec::with_capacity(manifest.entries.len());
    let mut ground_truth = Vec::with_capacity(manifest.entries.len());
    let mut thetas = Vec::with_capacity(manifest.entries.len());
    for entry in &manifest.entries {
        images.push(load_processed(&base, entry, cfg)?);
        ground_truth.push((entry.x, entry.y));
        thetas.push(entry.theta);
    }

    let odometry_path = odometry_override
        .map(Path::to_path_buf)
        .or(manifest.odometry);
    let deltas = match odometry_path {
        Some(p) => {
            let deltas = read_odometry(&p)?;
            if deltas.len() + 1 != images.len() {
                return Err(Error::OdometryLengthMismatch {
                    deltas: deltas.len(),
                    queries: images.len(),
                });
            }
            deltas
        }
        None => vec![OdometryDelta::ZERO; images.len().saturating_sub(1)],
    };

    Ok(QuerySet {
        images,
        ground_truth,
        thetas,
        deltas,
    })
}

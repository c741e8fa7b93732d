//! Crate-wide error type.

use std::path::PathBuf;

/// Errors produced by the localization pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("unsupported channel count {0}, expected 1 or 3")]
    UnsupportedChannels(usize),

    #[error("pixel buffer length {len} does not match {width}x{height}x{channels}")]
    BadPixelBuffer {
        width: usize,
        height: usize,
        channels: usize,
        len: usize,
    },

    #[error("empty image")]
    EmptyImage,

    #[error("crop rectangle ({left},{top}) {width}x{height} exceeds source bounds {src_width}x{src_height}")]
    CropOutOfBounds {
        left: usize,
        top: usize,
        width: usize,
        height: usize,
        src_width: usize,
        src_height: usize,
    },

    #[error("downsample target {target_width}x{target_height} exceeds source {src_width}x{src_height}")]
    DownsampleTargetTooLarge {
        target_width: usize,
        target_height: usize,
        src_width: usize,
        src_height: usize,
    },

    #[error("image dimensions differ: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),

    #[error("rotation index {index} out of range for image width {width}")]
    RotationOutOfRange { index: usize, width: usize },

    #[error("reference map is empty")]
    EmptyReferenceMap,

    #[error("duplicate reference node id {0}")]
    DuplicateNodeId(usize),

    #[error("non-finite node position for node {0}")]
    NonFiniteNodePosition(usize),

    #[error("nodes {0} and {1} share one position; interpolation needs distinct node locations")]
    DuplicateNodePosition(usize, usize),

    #[error("all reference nodes are collinear; interpolation needs at least 3 non-collinear nodes")]
    CollinearNodes,

    #[error("reference map bounding box has zero extent along {axis}")]
    DegenerateBounds { axis: char },

    #[error("grid must have at least 2 columns and 2 rows, got {cols}x{rows}")]
    GridTooSmall { cols: usize, rows: usize },

    #[error("score vector has {scores} entries for {nodes} reference nodes")]
    ScoreCountMismatch { scores: usize, nodes: usize },

    #[error("heat maps use different grid specs")]
    GridSpecMismatch,

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("pose ({x:.3}, {y:.3}) lies outside the world extent {width}x{height} m")]
    PoseOutsideWorld {
        x: f64,
        y: f64,
        width: f64,
        height: f64,
    },

    #[error("{}: line {line}: {message}", path.display())]
    Manifest {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{}: {message}", path.display())]
    FileFormat { path: PathBuf, message: String },

    #[error("config: {0}")]
    Config(String),

    #[error("odometry file holds {deltas} deltas for {queries} queries, expected {}", queries.saturating_sub(1))]
    OdometryLengthMismatch { deltas: usize, queries: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Image(#[from] image::ImageError),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

//! Low-resolution night-time visual place recognition over a 2D reference
//! grid.
//!
//! The pipeline, end to end:
//!
//! 1. [`imgproc`] — grayscale, histogram equalization, crop, box downsample,
//!    and local patch normalization turn camera frames into small
//!    illumination-invariant intensity grids.
//! 2. [`matcher`] — rotation-sweep sum-of-absolute-differences compares a
//!    query against every reference image, yielding a per-node score and
//!    best-aligning rotation.
//! 3. [`heatmap`] — scores over the scattered reference nodes are inverted
//!    into similarities and interpolated across a dense grid (Delaunay +
//!    barycentric), giving a likelihood surface over position.
//! 4. [`seq2d`] — consecutive heat maps are translated by odometry into the
//!    current frame and summed, sharpening the position estimate under noisy
//!    motion.
//! 5. [`sim`] — a procedural panorama world plus night-time degradation and
//!    odometry noise models generate reproducible benchmark datasets.
//! 6. [`harness`] — experiment runner, CSV schemas, and summary metrics
//!    (error quartiles, precision/recall) for end-to-end evaluation.
//!
//! All randomness is seeded and all iteration orders are fixed, so every
//! output — datasets, score matrices, localization traces — is bit-for-bit
//! reproducible, including across worker-thread counts.

pub mod config;
mod error;
pub mod harness;
pub mod heatmap;
pub mod imgproc;
pub mod matcher;
pub mod seq2d;
pub mod sim;

pub use config::FileConfig;
pub use error::{Error, Result};
pub use harness::{
    run_experiment, ErrorSummary, ExperimentConfig, ExperimentOutput, LocalizationResult,
    PrecisionReport,
};
pub use heatmap::{GridSpec, HeatMap, Interpolator, MapNode, ReferenceMap};
pub use imgproc::{preprocess, PreprocessConfig, ProcessedImage, RawImage};
pub use matcher::{match_query, DifferenceMatrix, DifferenceRow, Matcher};
pub use seq2d::{OdometryDelta, SequenceConfig, SequenceLocalizer};
pub use sim::{
    make_benchmark, BenchmarkConfig, CaptureConfig, NightConfig, NoiseModel, OdometryCorruptor,
    Pose2D, World, WorldConfig,
};

//! One-call experiment runner: load a dataset, localize every query in
//! trajectory order, write the per-query results file, and summarize it.

use std::path::Path;

use crate::error::Result;
use crate::heatmap::{best_match, build_grid, closest_reference, HeatMap, Interpolator};
use crate::imgproc::PreprocessConfig;
use crate::matcher::{invert_scores, Matcher};
use crate::seq2d::{SequenceConfig, SequenceState};
use crate::sim::{NoiseModel, OdometryCorruptor};

use super::manifest::{load_query_set, load_reference_map};
use super::metrics::{
    evaluate_results, write_results, ErrorSummary, LocalizationResult, PrecisionReport,
};

/// Everything that parameterizes one evaluation run.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub preprocess: PreprocessConfig,
    pub grid_cols: usize,
    pub grid_rows: usize,
    pub sequence_length: usize,
    /// Odometry noise model re-applied to the dataset's deltas at
    /// evaluation time (index into `NoiseModel::PRESETS`; 0 = use the
    /// deltas as stored).
    pub noise_model: usize,
    pub noise_seed: u64,
    /// When false, estimates snap to the nearest reference node instead of
    /// keeping the sub-node grid position.
    pub interpolation: bool,
    pub tolerance_m: f64,
    pub workers: usize,
    /// Keep each frame's combined window map in the output (for dumping or
    /// inspection). Off by default; large runs hold many grids.
    pub keep_heatmaps: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            preprocess: PreprocessConfig::default(),
            grid_cols: 100,
            grid_rows: 100,
            sequence_length: 7,
            noise_model: 0,
            noise_seed: 99,
            interpolation: true,
            tolerance_m: 3.0,
            workers: 4,
            keep_heatmaps: false,
        }
    }
}

/// Results plus the summaries computed from the serialized results file.
#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub results: Vec<LocalizationResult>,
    pub summary: ErrorSummary,
    pub precision: PrecisionReport,
    pub pixel_comparisons: u64,
    /// Per-frame combined maps; populated only with `keep_heatmaps`.
    pub heatmaps: Vec<HeatMap>,
}

/// Runs the full pipeline. Matching runs in parallel across queries; the
/// sequence accumulation then replays the rows in strict trajectory order,
/// so the output is independent of `workers`. `odometry` overrides the
/// dataset's own delta file when given.
pub fn run_experiment(
    ref_manifest: impl AsRef<Path>,
    query_manifest: impl AsRef<Path>,
    cfg: &ExperimentConfig,
    odometry: Option<&Path>,
    results_out: impl AsRef<Path>,
) -> Result<ExperimentOutput> {
    cfg.preprocess.validate()?;
    let map = load_reference_map(ref_manifest, &cfg.preprocess)?;
    let queries = load_query_set(query_manifest, &cfg.preprocess, odometry)?;

    let spec = build_grid(&map, cfg.grid_cols, cfg.grid_rows)?;
    let interpolator = Interpolator::new(&map, &spec)?;
    let matrix = Matcher::new(cfg.workers).difference_matrix(&queries.images, &map)?;

    let model = NoiseModel::preset(cfg.noise_model)?;
    let mut corruptor = OdometryCorruptor::new(model, cfg.noise_seed)?;

    let mut state = SequenceState::new(SequenceConfig {
        window_length: cfg.sequence_length,
    })?;
    let mut results = Vec::with_capacity(queries.images.len());
    let mut heatmaps = Vec::new();
    for (i, row) in matrix.rows().iter().enumerate() {
        let delta = if i == 0 {
            crate::seq2d::OdometryDelta::ZERO
        } else {
            corruptor.corrupt(queries.deltas[i - 1])?
        };
        let frame_map = interpolator.interpolate(&invert_scores(row))?;
        let combined = state.update(frame_map, delta)?;
        let position = best_match(&combined);
        let node_id = closest_reference(position, &map);
        if cfg.keep_heatmaps {
            heatmaps.push(combined);
        }
        let (est_x, est_y) = if cfg.interpolation {
            position
        } else {
            let node = &map.nodes()[node_id];
            (node.x, node.y)
        };
        let (gt_x, gt_y) = queries.ground_truth[i];
        results.push(LocalizationResult {
            query_id: i,
            est_x,
            est_y,
            node_id,
            gt_x,
            gt_y,
            error_m: (est_x - gt_x).hypot(est_y - gt_y),
        });
    }

    write_results(results_out.as_ref(), &results)?;
    let (summary, precision) = evaluate_results(results_out.as_ref(), cfg.tolerance_m)?;
    Ok(ExperimentOutput {
        results,
        summary,
        precision,
        pixel_comparisons: matrix.pixel_comparisons(),
        heatmaps,
    })
}

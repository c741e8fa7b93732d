//! Dataset loading, experiment execution, and evaluation metrics.

pub mod experiment;
pub mod manifest;
pub mod metrics;

pub use experiment::{run_experiment, ExperimentConfig, ExperimentOutput};
pub use manifest::{
    load_query_set, load_reference_map, read_manifest, read_odometry, write_manifest,
    write_odometry, DatasetManifest, ManifestEntry, QuerySet,
};
pub use metrics::{
    evaluate_results, precision_recall, quantile, read_results, summarize_errors, write_results,
    ErrorSummary, LocalizationResult, PrecisionReport,
};

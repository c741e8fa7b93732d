//! `nightloc` — command-line driver for the night-time place-recognition
//! pipeline: dataset simulation, preprocessing inspection, batch matching,
//! sequence localization, and results evaluation.
//!
//! Shared settings come from a `key = value` config file given with
//! `--config` (or the `NIGHTLOC_CONFIG` environment variable); explicit
//! flags override the file.

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use nightloc_core::config::FileConfig;
use nightloc_core::harness::{
    evaluate_results, load_query_set, load_reference_map, run_experiment, ErrorSummary,
    PrecisionReport,
};
use nightloc_core::heatmap::{MapNode, ReferenceMap};
use nightloc_core::imgproc::{preprocess, ProcessedImage, RawImage};
use nightloc_core::matcher::{comparison_count, Matcher};
use nightloc_core::sim::make_benchmark;

#[derive(Parser)]
#[command(name = "nightloc", version, about = "Low-resolution night-time visual place recognition")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

fn parse_on_off(s: &str) -> Result<bool, String> {
    match s.to_ascii_lowercase().as_str() {
        "on" | "true" | "1" | "yes" => Ok(true),
        "off" | "false" | "0" | "no" => Ok(false),
        _ => Err(format!("expected on/off, got {s:?}")),
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic benchmark dataset (references, night queries,
    /// odometry) under a directory.
    Simulate {
        /// Output dataset directory.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },

    /// Preprocess one image and write the normalized result as a PGM
    /// preview (and optionally the raw values as CSV).
    Preprocess {
        #[arg(long)]
        input: PathBuf,
        /// PGM preview of the normalized image (min/max rescaled).
        #[arg(long)]
        output: PathBuf,
        /// Exact normalized values, one CSV row per image row.
        #[arg(long)]
        values_csv: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
    },

    /// Match every query against every reference and write the difference
    /// matrix (scores + best rotations).
    Match {
        #[arg(long)]
        refs: PathBuf,
        #[arg(long)]
        queries: PathBuf,
        /// Output CSV of minimum rotated scores.
        #[arg(long)]
        scores: PathBuf,
        /// Output CSV of the rotation index attaining each score.
        #[arg(long)]
        rotations: PathBuf,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        config: Option<PathBuf>,
    },

    /// Localize a query sequence against a reference map and write
    /// per-query results.
    Localize {
        #[arg(long)]
        refs: PathBuf,
        #[arg(long)]
        queries: PathBuf,
        /// Per-query results CSV.
        #[arg(long)]
        results: PathBuf,
        /// Odometry deltas; defaults to `odometry.csv` next to the query
        /// manifest when present.
        #[arg(long)]
        odometry: Option<PathBuf>,
        /// Dump each frame's combined heat map into this directory.
        #[arg(long)]
        heatmap_dir: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        sequence_length: Option<usize>,
        /// Odometry noise model index applied at evaluation time.
        #[arg(long)]
        noise_model: Option<usize>,
        #[arg(long)]
        noise_seed: Option<u64>,
        /// on/off: sub-node interpolation vs nearest-node snapping.
        #[arg(long, value_parser = parse_on_off)]
        interpolation: Option<bool>,
        #[arg(long)]
        tolerance: Option<f64>,
        #[arg(long)]
        workers: Option<usize>,
    },

    /// Summarize a results file: error quartiles and precision/recall.
    Evaluate {
        #[arg(long)]
        results: PathBuf,
        #[arg(long, default_value_t = 3.0)]
        tolerance: f64,
        /// Row label for --summary-csv; defaults to the results file stem.
        #[arg(long)]
        label: Option<String>,
        /// Append a one-line summary row (plot-ready) to this CSV.
        #[arg(long)]
        summary_csv: Option<PathBuf>,
    },

    /// Synthetic matching throughput check; verifies the comparison
    /// counter against the closed-form count.
    Bench {
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[arg(long, default_value_t = 50)]
        refs: usize,
        #[arg(long, default_value_t = 5)]
        frames: usize,
        #[arg(long, default_value_t = 48)]
        width: usize,
        #[arg(long, default_value_t = 24)]
        height: usize,
    },
}

/// `--config` flag, else `NIGHTLOC_CONFIG`, else empty (all defaults).
fn file_config(flag: Option<PathBuf>) -> anyhow::Result<FileConfig> {
    let path = flag.or_else(|| std::env::var_os("NIGHTLOC_CONFIG").map(PathBuf::from));
    match path {
        Some(p) => FileConfig::from_file(&p)
            .with_context(|| format!("loading config {}", p.display())),
        None => Ok(FileConfig::default()),
    }
}

fn print_summary(summary: &ErrorSummary, precision: &PrecisionReport) {
    println!(
        "error quartiles (m): min {:.6} / q1 {:.6} / median {:.6} / q3 {:.6} / max {:.6}",
        summary.min, summary.q1, summary.median, summary.q3, summary.max
    );
    println!(
        "precision@{}m: {:.4}  recall: {:.4}  ({} of {} within tolerance)",
        precision.tolerance_m, precision.precision, precision.recall,
        precision.true_positives, precision.total_queries
    );
}

fn cmd_simulate(out: PathBuf, config: Option<PathBuf>) -> anyhow::Result<()> {
    let cfg = file_config(config)?.benchmark_config()?;
    let paths = make_benchmark(&cfg, &out)?;
    println!("references: {}", paths.references.display());
    println!("queries:    {}", paths.queries.display());
    println!("odometry:   {}", paths.odometry.display());
    Ok(())
}

fn cmd_preprocess(
    input: PathBuf,
    output: PathBuf,
    values_csv: Option<PathBuf>,
    config: Option<PathBuf>,
) -> anyhow::Result<()> {
    let cfg = file_config(config)?.experiment_config()?.preprocess;
    let raw = RawImage::load(&input).with_context(|| format!("loading {}", input.display()))?;
    let processed = preprocess(&raw, &cfg)?;

    let (w, h) = (processed.width(), processed.height());
    let lo = processed.values().iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = processed.values().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let pixels: Vec<u8> = processed
        .values()
        .iter()
        .map(|&v| {
            if hi - lo < 1e-12 {
                128
            } else {
                ((v - lo) / (hi - lo) * 255.0).round() as u8
            }
        })
        .collect();
    RawImage::gray(w, h, pixels)?.save_pgm(&output)?;
    println!(
        "preprocessed {}: {}x{} -> {}x{}, value range [{lo:.4}, {hi:.4}]",
        input.display(),
        raw.width(),
        raw.height(),
        w,
        h
    );
    println!("preview: {}", output.display());

    if let Some(path) = values_csv {
        let mut writer = csv::WriterBuilder::new().has_headers(false).from_path(&path)?;
        for row in processed.values().chunks(w) {
            writer.write_record(row.iter().map(|v| format!("{v}")))?;
        }
        writer.flush()?;
        println!("values: {}", path.display());
    }
    Ok(())
}

fn cmd_match(
    refs: PathBuf,
    queries: PathBuf,
    scores: PathBuf,
    rotations: PathBuf,
    workers: Option<usize>,
    config: Option<PathBuf>,
) -> anyhow::Result<()> {
    let mut cfg = file_config(config)?.experiment_config()?;
    if let Some(w) = workers {
        cfg.workers = w;
    }
    let map = load_reference_map(&refs, &cfg.preprocess)?;
    let query_set = load_query_set(&queries, &cfg.preprocess, None)?;
    println!(
        "matching {} queries against {} references ({} workers)",
        query_set.images.len(),
        map.len(),
        cfg.workers
    );
    let t0 = Instant::now();
    let matrix = Matcher::new(cfg.workers).difference_matrix(&query_set.images, &map)?;
    let dt = t0.elapsed();
    matrix.write_csv(&scores, &rotations)?;
    println!("pixel comparisons: {}", matrix.pixel_comparisons());
    println!(
        "elapsed: {:.1} ms ({:.2e} comparisons/second)",
        dt.as_secs_f64() * 1e3,
        matrix.pixel_comparisons() as f64 / dt.as_secs_f64()
    );
    println!("scores: {}", scores.display());
    println!("rotations: {}", rotations.display());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_localize(
    refs: PathBuf,
    queries: PathBuf,
    results: PathBuf,
    odometry: Option<PathBuf>,
    heatmap_dir: Option<PathBuf>,
    config: Option<PathBuf>,
    sequence_length: Option<usize>,
    noise_model: Option<usize>,
    noise_seed: Option<u64>,
    interpolation: Option<bool>,
    tolerance: Option<f64>,
    workers: Option<usize>,
) -> anyhow::Result<()> {
    let mut cfg = file_config(config)?.experiment_config()?;
    if let Some(v) = sequence_length {
        cfg.sequence_length = v;
    }
    if let Some(v) = noise_model {
        cfg.noise_model = v;
    }
    if let Some(v) = noise_seed {
        cfg.noise_seed = v;
    }
    if let Some(v) = interpolation {
        cfg.interpolation = v;
    }
    if let Some(v) = tolerance {
        cfg.tolerance_m = v;
    }
    if let Some(v) = workers {
        cfg.workers = v;
    }
    cfg.keep_heatmaps = heatmap_dir.is_some();

    let output = run_experiment(&refs, &queries, &cfg, odometry.as_deref(), &results)?;
    println!(
        "localized {} queries (window {}, noise model {}, interpolation {})",
        output.results.len(),
        cfg.sequence_length,
        cfg.noise_model,
        if cfg.interpolation { "on" } else { "off" }
    );
    println!("pixel comparisons: {}", output.pixel_comparisons);
    print_summary(&output.summary, &output.precision);
    println!("results: {}", results.display());

    if let Some(dir) = heatmap_dir {
        std::fs::create_dir_all(&dir)?;
        for (i, hm) in output.heatmaps.iter().enumerate() {
            hm.write_csv(
                dir.join(format!("frame_{i:03}.csv")),
                dir.join(format!("frame_{i:03}.meta")),
                Some(cfg.sequence_length),
            )?;
        }
        println!("heat maps: {} frames in {}", output.heatmaps.len(), dir.display());
    }
    Ok(())
}

fn cmd_evaluate(
    results: PathBuf,
    tolerance: f64,
    label: Option<String>,
    summary_csv: Option<PathBuf>,
) -> anyhow::Result<()> {
    let (summary, precision) = evaluate_results(&results, tolerance)?;
    let label = label.unwrap_or_else(|| {
        results
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "results".into())
    });
    println!("{label}: {} queries", summary.count);
    print_summary(&summary, &precision);

    if let Some(path) = summary_csv {
        append_summary_row(&path, &label, &summary, &precision)?;
        println!("summary row appended to {}", path.display());
    }
    Ok(())
}

/// Appends one labeled row; writes the header first when the file is new.
fn append_summary_row(
    path: &Path,
    label: &str,
    s: &ErrorSummary,
    p: &PrecisionReport,
) -> anyhow::Result<()> {
    let new_file = !path.exists();
    let file = std::fs::OpenOptions::new().create(true).append(true).open(path)?;
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(file);
    if new_file {
        w.write_record([
            "label", "count", "min_m", "q1_m", "median_m", "q3_m", "max_m", "tolerance_m",
            "true_positives", "false_positives", "precision", "recall",
        ])?;
    }
    w.write_record(&[
        label.to_string(),
        s.count.to_string(),
        format!("{:.6}", s.min),
        format!("{:.6}", s.q1),
        format!("{:.6}", s.median),
        format!("{:.6}", s.q3),
        format!("{:.6}", s.max),
        format!("{}", p.tolerance_m),
        p.true_positives.to_string(),
        p.false_positives.to_string(),
        format!("{:.6}", p.precision),
        format!("{:.6}", p.recall),
    ])?;
    w.flush()?;
    Ok(())
}

fn cmd_bench(
    workers: usize,
    refs: usize,
    frames: usize,
    width: usize,
    height: usize,
) -> anyhow::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(1234);
    let mut random_image = |w: usize, h: usize| {
        ProcessedImage::new(w, h, (0..w * h).map(|_| rng.random_range(-2.0..2.0)).collect())
    };
    let nodes = (0..refs)
        .map(|i| {
            Ok(MapNode {
                id: i,
                x: (i % 8) as f64,
                y: (i / 8) as f64 + (i % 8) as f64 * 0.01,
                image: random_image(width, height)?,
            })
        })
        .collect::<Result<Vec<_>, nightloc_core::Error>>()?;
    let map = ReferenceMap::new(nodes)?;
    let queries: Vec<ProcessedImage> = (0..frames)
        .map(|_| random_image(width, height))
        .collect::<Result<_, _>>()?;

    let t0 = Instant::now();
    let matrix = Matcher::new(workers).difference_matrix(&queries, &map)?;
    let dt = t0.elapsed();

    let expected = comparison_count(refs, width, height) * frames as u64;
    if matrix.pixel_comparisons() != expected {
        bail!(
            "comparison counter mismatch: counted {}, expected {}",
            matrix.pixel_comparisons(),
            expected
        );
    }
    println!(
        "matched {frames} frames x {refs} references at {width}x{height} ({workers} workers)"
    );
    println!("pixel comparisons: {} (matches closed form)", matrix.pixel_comparisons());
    println!(
        "elapsed: {:.1} ms, throughput: {:.3e} comparisons/second",
        dt.as_secs_f64() * 1e3,
        expected as f64 / dt.as_secs_f64()
    );
    Ok(())
}

fn main() -> anyhow::Result<()> {
    match Cli::parse().command {
        Command::Simulate { out, config } => cmd_simulate(out, config),
        Command::Preprocess {
            input,
            output,
            values_csv,
            config,
        } => cmd_preprocess(input, output, values_csv, config),
        Command::Match {
            refs,
            queries,
            scores,
            rotations,
            workers,
            config,
        } => cmd_match(refs, queries, scores, rotations, workers, config),
        Command::Localize {
            refs,
            queries,
            results,
            odometry,
            heatmap_dir,
            config,
            sequence_length,
            noise_model,
            noise_seed,
            interpolation,
            tolerance,
            workers,
        } => cmd_localize(
            refs,
            queries,
            results,
            odometry,
            heatmap_dir,
            config,
            sequence_length,
            noise_model,
            noise_seed,
            interpolation,
            tolerance,
            workers,
        ),
        Command::Evaluate {
            results,
            tolerance,
            label,
            summary_csv,
        } => cmd_evaluate(results, tolerance, label, summary_csv),
        Command::Bench {
            workers,
            refs,
            frames,
            width,
            height,
        } => cmd_bench(workers, refs, frames, width, height),
    }
}

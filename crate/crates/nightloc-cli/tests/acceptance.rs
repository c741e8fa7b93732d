//! Acceptance gate: one test per shipping criterion, each printing a
//! PASS line with the measured values. Every tolerance here is part of the
//! contract — do not loosen them to make a regression green.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use nightloc_core::harness::{read_manifest, run_experiment, ExperimentConfig};
use nightloc_core::heatmap::{build_grid, Interpolator, MapNode, ReferenceMap};
use nightloc_core::imgproc::{
    equalize_histogram, preprocess, PreprocessConfig, ProcessedImage, RawImage,
};
use nightloc_core::matcher::{
    comparison_count, invert_scores, min_score, sad_at_rotation, shift_columns, DifferenceRow,
    Matcher,
};
use nightloc_core::sim::{
    apply_noise, make_benchmark, render_panorama, BenchmarkConfig, CaptureConfig, NightConfig,
    NoiseModel, Pose2D, World, WorldConfig,
};

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_nightloc"));
    cmd.env_remove("NIGHTLOC_CONFIG");
    cmd
}

fn random_image(rng: &mut ChaCha8Rng, w: usize, h: usize) -> ProcessedImage {
    ProcessedImage::new(w, h, (0..w * h).map(|_| rng.random_range(-2.0..2.0)).collect()).unwrap()
}

fn similarity(values: &[f64]) -> nightloc_core::matcher::InvertedScores {
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    invert_scores(&DifferenceRow {
        query_id: 0,
        min_scores: values.iter().map(|v| max - v).collect(),
        best_rotations: vec![0; values.len()],
    })
}

fn grid_refs(rng: &mut ChaCha8Rng, n: usize, w: usize, h: usize) -> ReferenceMap {
    let nodes = (0..n)
        .map(|i| MapNode {
            id: i,
            x: (i % 8) as f64 * 1.2,
            y: (i / 8) as f64 * 1.1 + (i % 8) as f64 * 0.013,
            image: random_image(rng, w, h),
        })
        .collect();
    ReferenceMap::new(nodes).unwrap()
}

/// Criterion 1: matching one query against 50 references at 48x24 costs
/// exactly 50 * 48 * 24 * 48 = 2,764,800 pixel comparisons, the
/// instrumented counter agrees with the closed form, and the run is fast.
#[test]
fn criterion_01_comparison_count_closed_form() {
    let t0 = Instant::now();
    assert_eq!(comparison_count(50, 48, 24), 2_764_800);

    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let map = grid_refs(&mut rng, 50, 48, 24);
    let query = vec![random_image(&mut rng, 48, 24)];
    let matrix = Matcher::new(1).difference_matrix(&query, &map).unwrap();
    assert_eq!(matrix.pixel_comparisons(), 2_764_800);

    let elapsed = t0.elapsed();
    assert!(elapsed.as_secs_f64() < 1.0, "took {elapsed:?}, budget 1 s");
    println!(
        "criterion 01 PASS — counter = closed form = 2764800, elapsed {:.1} ms",
        elapsed.as_secs_f64() * 1e3
    );
}

/// Criterion 2: for rendered panoramas, every column rotation of a
/// reference is recovered exactly — score 0.0 and the exact shift index —
/// across 200 panoramas x all 48 rotations.
#[test]
fn criterion_02_rotation_recovery_exact() {
    let t0 = Instant::now();
    let world = World::generate(WorldConfig::default()).unwrap();
    let capture = CaptureConfig::default();
    let pp = PreprocessConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(5);

    let mut checked = 0usize;
    for _ in 0..200 {
        let pose = Pose2D::new(
            rng.random_range(1.0..9.0),
            rng.random_range(1.0..7.0),
            rng.random_range(0.0..std::f64::consts::TAU),
        );
        let img = preprocess(&render_panorama(&world, pose, &capture).unwrap(), &pp).unwrap();
        for s in 0..img.width() {
            let shifted = shift_columns(&img, s);
            let (score, k) = min_score(&shifted, &img).unwrap();
            assert_eq!(score, 0.0, "pose {pose:?} shift {s}: nonzero best score");
            assert_eq!(k, s, "pose {pose:?}: recovered {k}, expected {s}");
            checked += 1;
        }
    }
    let elapsed = t0.elapsed();
    assert!(elapsed.as_secs_f64() < 10.0, "took {elapsed:?}, budget 10 s");
    println!(
        "criterion 02 PASS — {checked} rotation recoveries exact, elapsed {:.2} s",
        elapsed.as_secs_f64()
    );
}

/// Criterion 3: global affine illumination changes of the raw query
/// (gain >= 1, offset, no clipping) leave its difference-matrix row
/// unchanged within 1e-6, over 100 images x 20 transforms.
#[test]
fn criterion_03_affine_illumination_invariance() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let pp = PreprocessConfig::default();
    let map = grid_refs(&mut rng, 5, 48, 24);

    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let (w, h) = (96usize, 48usize);
        let pixels: Vec<u8> = (0..w * h).map(|_| rng.random_range(40..=200)).collect();
        let raw = RawImage::gray(w, h, pixels.clone()).unwrap();
        let base = nightloc_core::match_query(&preprocess(&raw, &pp).unwrap(), &map, 0).unwrap();

        for _ in 0..20 {
            let a: f64 = rng.random_range(1.0..1.4);
            // Offset range keeping a*v + b inside [0, 255] for v in [40, 200].
            let b: f64 = rng.random_range((-40.0 * a)..(255.0 - 200.0 * a));
            let transformed: Vec<u8> = pixels
                .iter()
                .map(|&v| (a * v as f64 + b).round() as u8)
                .collect();
            let abused = RawImage::gray(w, h, transformed).unwrap();

            // The equalized images must agree exactly: the transform is a
            // monotone injection on the occupied intensity levels.
            assert_eq!(
                equalize_histogram(&raw).unwrap().pixels(),
                equalize_histogram(&abused).unwrap().pixels(),
                "equalization broke under a={a} b={b}"
            );

            let row =
                nightloc_core::match_query(&preprocess(&abused, &pp).unwrap(), &map, 0).unwrap();
            for (s, t) in base.min_scores.iter().zip(&row.min_scores) {
                let diff = (s - t).abs();
                worst = worst.max(diff);
                assert!(diff <= 1e-6, "score moved by {diff} under a={a} b={b}");
            }
        }
    }
    println!("criterion 03 PASS — 2000 affine transforms, worst score drift {worst:.2e}");
}

fn benchmark_dataset(dir: &Path) -> (PathBuf, PathBuf) {
    let paths = make_benchmark(&BenchmarkConfig::default(), dir).unwrap();
    (paths.references, paths.queries)
}

fn median_for(
    refs: &Path,
    queries: &Path,
    results: &Path,
    sequence_length: usize,
    noise_model: usize,
    interpolation: bool,
) -> f64 {
    let cfg = ExperimentConfig {
        sequence_length,
        noise_model,
        interpolation,
        ..ExperimentConfig::default()
    };
    run_experiment(refs, queries, &cfg, None, results).unwrap().summary.median
}

/// Criterion 4: on the standard night benchmark with odometry model 1,
/// longer sequence windows improve the median error — non-increasing
/// within 10% slack per step over windows {1, 3, 7, 10}, and window 7
/// reaches at most 0.7x the single-frame median. Completes within 60 s.
#[test]
fn criterion_04_sequence_length_improves_accuracy() {
    let t0 = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let (refs, queries) = benchmark_dataset(dir.path());

    let windows = [1usize, 3, 7, 10];
    let medians: Vec<f64> = windows
        .iter()
        .map(|&l| {
            median_for(&refs, &queries, &dir.path().join(format!("r{l}.csv")), l, 1, true)
        })
        .collect();

    for (pair, w) in medians.windows(2).zip(windows.windows(2)) {
        assert!(
            pair[1] <= pair[0] * 1.10,
            "window {} median {:.4} regressed from window {} median {:.4}",
            w[1], pair[1], w[0], pair[0]
        );
    }
    assert!(
        medians[2] <= 0.7 * medians[0],
        "window 7 median {:.4} not under 0.7x single-frame {:.4}",
        medians[2], medians[0]
    );
    let elapsed = t0.elapsed();
    assert!(elapsed.as_secs_f64() < 60.0, "took {elapsed:?}, budget 60 s");
    println!(
        "criterion 04 PASS — medians {:?} m for windows {:?}, elapsed {:.1} s",
        medians.iter().map(|m| (m * 1e4).round() / 1e4).collect::<Vec<_>>(),
        windows,
        elapsed.as_secs_f64()
    );
}

/// Criterion 5: at window 7, heavier odometry noise models degrade the
/// median error monotonically (within 10% slack) over models 0..=3.
#[test]
fn criterion_05_noise_models_degrade_gracefully() {
    let dir = tempfile::tempdir().unwrap();
    let (refs, queries) = benchmark_dataset(dir.path());

    let medians: Vec<f64> = (0..4)
        .map(|m| median_for(&refs, &queries, &dir.path().join(format!("m{m}.csv")), 7, m, true))
        .collect();
    for (m, pair) in medians.windows(2).enumerate() {
        assert!(
            pair[1] >= pair[0] * 0.90,
            "model {} median {:.4} implausibly beats model {} median {:.4}",
            m + 1, pair[1], m, pair[0]
        );
    }
    println!("criterion 05 PASS — medians {medians:?} m for noise models 0..=3");
}

/// Criterion 6: with window 7 and noise model 1 on the off-node benchmark
/// trajectory, sub-node interpolation beats nearest-node snapping.
#[test]
fn criterion_06_interpolation_beats_node_snapping() {
    let dir = tempfile::tempdir().unwrap();
    let (refs, queries) = benchmark_dataset(dir.path());

    let on = median_for(&refs, &queries, &dir.path().join("on.csv"), 7, 1, true);
    let off = median_for(&refs, &queries, &dir.path().join("off.csv"), 7, 1, false);
    assert!(
        on <= off,
        "interpolated median {on:.4} worse than node snapping {off:.4}"
    );
    println!("criterion 06 PASS — median {on:.4} m interpolated vs {off:.4} m snapped");
}

/// Criterion 7: core numerics agree with independent oracles — rotated SAD
/// to 1e-12, in-hull barycentric interpolation to 1e-9, and quartiles on
/// known inputs exactly.
#[test]
fn criterion_07_numeric_oracles() {
    let mut rng = ChaCha8Rng::seed_from_u64(29);

    // Rotated SAD against a modulo-indexed re-implementation.
    let sad_oracle = |q: &ProcessedImage, r: &ProcessedImage, k: usize| -> f64 {
        let (w, h) = (q.width(), q.height());
        let mut total = 0.0;
        for i in 0..h {
            for j in 0..w {
                total += (q.value((j + k) % w, i) - r.value(j, i)).abs();
            }
        }
        total / (w * h) as f64
    };
    let mut worst_sad: f64 = 0.0;
    for _ in 0..50 {
        let q = random_image(&mut rng, 6, 4);
        let r = random_image(&mut rng, 6, 4);
        for k in 0..6 {
            let got = sad_at_rotation(&q, &r, k).unwrap();
            let want = sad_oracle(&q, &r, k);
            worst_sad = worst_sad.max((got - want).abs());
        }
    }
    assert!(worst_sad <= 1e-12, "SAD drift {worst_sad}");

    // Barycentric weights against a Cramer's-rule solve on a 3-node map.
    let (a, b, c) = ((0.3, 0.2), (2.6, 0.5), (0.9, 2.4));
    let tri_map = ReferenceMap::new(vec![
        MapNode { id: 0, x: a.0, y: a.1, image: random_image(&mut rng, 4, 2) },
        MapNode { id: 1, x: b.0, y: b.1, image: random_image(&mut rng, 4, 2) },
        MapNode { id: 2, x: c.0, y: c.1, image: random_image(&mut rng, 4, 2) },
    ])
    .unwrap();
    let spec = build_grid(&tri_map, 10, 10).unwrap();
    let interp = Interpolator::new(&tri_map, &spec).unwrap();
    let raw = vec![3.0, 1.0, 4.5];
    let scores = similarity(&raw);
    let s = scores.values();
    let mut worst_bary: f64 = 0.0;
    for _ in 0..200 {
        // Random strictly-interior point via normalized positive weights.
        let (u, v, w) = (
            rng.random_range(0.05..1.0),
            rng.random_range(0.05..1.0),
            rng.random_range(0.05..1.0),
        );
        let total = u + v + w;
        let (wa, wb, wc) = (u / total, v / total, w / total);
        let p = (
            wa * a.0 + wb * b.0 + wc * c.0,
            wa * a.1 + wb * b.1 + wc * c.1,
        );
        // Independent weight solve.
        let det = (b.0 - a.0) * (c.1 - a.1) - (c.0 - a.0) * (b.1 - a.1);
        let ob = ((p.0 - a.0) * (c.1 - a.1) - (c.0 - a.0) * (p.1 - a.1)) / det;
        let oc = ((b.0 - a.0) * (p.1 - a.1) - (p.0 - a.0) * (b.1 - a.1)) / det;
        let oracle = (1.0 - ob - oc) * s[0] + ob * s[1] + oc * s[2];
        let got = interp.evaluate(&scores, p.0, p.1).unwrap();
        worst_bary = worst_bary.max((got - oracle).abs());
    }
    assert!(worst_bary <= 1e-9, "barycentric drift {worst_bary}");

    // Quartiles on known inputs.
    let s = nightloc_core::harness::summarize_errors(&[5.0, 3.0, 1.0, 4.0, 2.0]).unwrap();
    assert_eq!((s.q1, s.median, s.q3), (2.0, 3.0, 4.0));
    let e = nightloc_core::harness::summarize_errors(&[(3.0f64).hypot(4.0)]).unwrap();
    assert_eq!(e.median, 5.0);

    println!(
        "criterion 07 PASS — SAD drift {worst_sad:.1e}, barycentric drift {worst_bary:.1e}, quartiles exact"
    );
}

/// Criterion 8: over 100k draws, the empirical sigma of each noise model's
/// distance and heading corruption is within 2% of its nominal sigma.
#[test]
fn criterion_08_noise_sigma_calibration() {
    for (index, model) in NoiseModel::PRESETS.iter().enumerate().skip(1) {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + index as u64);
        let n = 100_000;
        let mut dist_sq = 0.0;
        let mut head_sq = 0.0;
        for _ in 0..n {
            let (d, h) = apply_noise((1.0, 0.3), model, &mut rng).unwrap();
            dist_sq += (d - 1.0) * (d - 1.0);
            head_sq += (h - 0.3) * (h - 0.3);
        }
        let dist_sigma = (dist_sq / n as f64).sqrt();
        let head_sigma = (head_sq / n as f64).sqrt();
        let dist_err = (dist_sigma - model.distance_sigma).abs() / model.distance_sigma;
        let head_err = (head_sigma - model.heading_sigma).abs() / model.heading_sigma;
        assert!(
            dist_err < 0.02,
            "model {index}: distance sigma {dist_sigma:.5} vs nominal {}",
            model.distance_sigma
        );
        assert!(
            head_err < 0.02,
            "model {index}: heading sigma {head_sigma:.5} vs nominal {}",
            model.heading_sigma
        );
    }
    println!("criterion 08 PASS — all preset sigmas calibrated within 2% at 100k draws");
}

/// Criterion 9: self-localization — queries taken exactly at the reference
/// nodes with no night transform and clean odometry must pick the correct
/// node for every query, with position error at most half a grid-cell
/// diagonal.
#[test]
fn criterion_09_node_self_localization() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = BenchmarkConfig {
        queries_at_nodes: true,
        night: NightConfig::identity(),
        ..BenchmarkConfig::default()
    };
    let paths = make_benchmark(&cfg, dir.path()).unwrap();

    let exp = ExperimentConfig {
        sequence_length: 1,
        noise_model: 0,
        ..ExperimentConfig::default()
    };
    let out = run_experiment(
        &paths.references,
        &paths.queries,
        &exp,
        None,
        dir.path().join("results.csv"),
    )
    .unwrap();

    let nodes = read_manifest(&paths.references).unwrap();
    let span_x = cfg.ref_spacing.0 * (cfg.ref_cols - 1) as f64;
    let span_y = cfg.ref_spacing.1 * (cfg.ref_rows - 1) as f64;
    let bound = 0.5
        * (span_x / exp.grid_cols as f64).hypot(span_y / exp.grid_rows as f64)
        + 1e-9;

    let mut worst: f64 = 0.0;
    for r in &out.results {
        let node = &nodes[r.node_id];
        assert!(
            (node.x - r.gt_x).abs() < 1e-9 && (node.y - r.gt_y).abs() < 1e-9,
            "query {} at ({}, {}) resolved to node {} at ({}, {})",
            r.query_id, r.gt_x, r.gt_y, r.node_id, node.x, node.y
        );
        worst = worst.max(r.error_m);
        assert!(
            r.error_m <= bound,
            "query {}: error {} exceeds half-diagonal bound {}",
            r.query_id, r.error_m, bound
        );
    }
    println!(
        "criterion 09 PASS — {} node queries all correct, worst error {worst:.6} m <= bound {bound:.6} m",
        out.results.len()
    );
}

fn run_ok(cmd: &mut Command) -> String {
    let output = cmd.output().expect("spawn nightloc");
    assert!(
        output.status.success(),
        "command failed\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr)
    );
    String::from_utf8_lossy(&output.stdout).into_owned()
}

fn tree_bytes(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    fn walk(dir: &Path, root: &Path, out: &mut BTreeMap<PathBuf, Vec<u8>>) {
        for entry in std::fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                walk(&path, root, out);
            } else {
                out.insert(
                    path.strip_prefix(root).unwrap().to_path_buf(),
                    std::fs::read(&path).unwrap(),
                );
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(root, root, &mut out);
    out
}

/// Criterion 10: the command-line pipeline (simulate -> localize ->
/// evaluate) is byte-for-byte reproducible across runs.
#[test]
fn criterion_10_bit_reproducible_cli_pipeline() {
    let base = tempfile::tempdir().unwrap();
    let mut trees = Vec::new();
    for run in ["a", "b"] {
        let dir = base.path().join(run);
        run_ok(bin().args(["simulate", "--out"]).arg(&dir));
        run_ok(
            bin()
                .arg("localize")
                .arg("--refs").arg(dir.join("refs.csv"))
                .arg("--queries").arg(dir.join("queries.csv"))
                .arg("--results").arg(dir.join("results.csv"))
                .args(["--noise-model", "1", "--sequence-length", "7"]),
        );
        run_ok(
            bin()
                .arg("evaluate")
                .arg("--results").arg(dir.join("results.csv"))
                .args(["--label", "repro"])
                .arg("--summary-csv").arg(dir.join("summary.csv")),
        );
        trees.push(tree_bytes(&dir));
    }
    let (a, b) = (&trees[0], &trees[1]);
    assert_eq!(
        a.keys().collect::<Vec<_>>(),
        b.keys().collect::<Vec<_>>(),
        "runs produced different file sets"
    );
    for (path, bytes) in a {
        assert_eq!(bytes, &b[path], "{} differs between runs", path.display());
    }
    println!(
        "criterion 10 PASS — {} files byte-identical across two full CLI runs",
        a.len()
    );
}

/// Criterion 11: the bench subcommand verifies the comparison counter
/// against the closed form and reports throughput, with the measured
/// matching time under 100 ms single-worker.
#[test]
fn criterion_11_throughput_bench() {
    let stdout = run_ok(bin().args(["bench", "--workers", "1"]));
    assert!(
        stdout.contains("pixel comparisons: 13824000 (matches closed form)"),
        "missing verified counter line:\n{stdout}"
    );
    assert!(stdout.contains("comparisons/second"), "missing throughput:\n{stdout}");
    let elapsed_ms: f64 = stdout
        .lines()
        .find(|l| l.starts_with("elapsed:"))
        .and_then(|l| l.split_whitespace().nth(1))
        .expect("elapsed line")
        .parse()
        .expect("elapsed value");
    assert!(elapsed_ms < 100.0, "matching took {elapsed_ms} ms, budget 100 ms");
    println!("criterion 11 PASS — counter verified, matching {elapsed_ms:.1} ms single-worker");
}

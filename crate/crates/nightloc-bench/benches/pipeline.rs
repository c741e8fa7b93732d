//! Hot-path benchmarks: rotation-sweep matching, patch normalization,
//! grid interpolation, and heat-map translation at production sizes.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion, Throughput};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use nightloc_core::heatmap::{build_grid, GridSpec, HeatMap, Interpolator, MapNode, ReferenceMap};
use nightloc_core::imgproc::patch_normalize_values;
use nightloc_core::matcher::{invert_scores, rotation_scores, DifferenceRow, Matcher};
use nightloc_core::seq2d::{translate_heatmap, OdometryDelta};
use nightloc_core::ProcessedImage;

fn random_image(rng: &mut ChaCha8Rng, w: usize, h: usize) -> ProcessedImage {
    ProcessedImage::new(w, h, (0..w * h).map(|_| rng.random_range(-2.0..2.0)).collect()).unwrap()
}

fn reference_map(rng: &mut ChaCha8Rng, n: usize, w: usize, h: usize) -> ReferenceMap {
    let nodes = (0..n)
        .map(|i| MapNode {
            id: i,
            x: (i % 10) as f64 * 1.4,
            y: (i / 10) as f64 * 1.25,
            image: random_image(rng, w, h),
        })
        .collect();
    ReferenceMap::new(nodes).unwrap()
}

fn bench_rotation_scores(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let q = random_image(&mut rng, 48, 24);
    let r = random_image(&mut rng, 48, 24);
    let mut group = c.benchmark_group("matcher");
    group.throughput(Throughput::Elements(48 * 24 * 48));
    group.bench_function("rotation_scores_48x24", |b| {
        b.iter(|| rotation_scores(black_box(&q), black_box(&r)).unwrap())
    });
    group.finish();
}

fn bench_difference_row(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let map = reference_map(&mut rng, 50, 48, 24);
    let queries = vec![random_image(&mut rng, 48, 24)];
    let matcher = Matcher::new(1);
    let mut group = c.benchmark_group("matcher");
    group.throughput(Throughput::Elements(50 * 48 * 24 * 48));
    group.bench_function("difference_row_vs_50_refs", |b| {
        b.iter(|| matcher.difference_matrix(black_box(&queries), black_box(&map)).unwrap())
    });
    group.finish();
}

fn bench_patch_normalize(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (w, h) = (96usize, 48usize);
    let values: Vec<f64> = (0..w * h).map(|_| rng.random_range(0.0..255.0)).collect();
    let mut group = c.benchmark_group("imgproc");
    group.throughput(Throughput::Elements((w * h) as u64));
    group.bench_function("patch_normalize_96x48_r4", |b| {
        b.iter(|| patch_normalize_values(black_box(&values), w, h, 4))
    });
    group.finish();
}

fn bench_interpolate(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let map = reference_map(&mut rng, 30, 4, 2);
    let spec = build_grid(&map, 100, 100).unwrap();
    let interp = Interpolator::new(&map, &spec).unwrap();
    let scores = invert_scores(&DifferenceRow {
        query_id: 0,
        min_scores: (0..30).map(|_| rng.random_range(0.0..2.0)).collect(),
        best_rotations: vec![0; 30],
    });
    let mut group = c.benchmark_group("heatmap");
    group.throughput(Throughput::Elements(100 * 100));
    group.bench_function("interpolate_30_nodes_100x100", |b| {
        b.iter(|| interp.interpolate(black_box(&scores)).unwrap())
    });
    group.finish();
}

fn bench_translate(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let spec = GridSpec {
        cols: 100,
        rows: 100,
        origin_x: 0.0,
        origin_y: 0.0,
        cell_size_x: 0.07,
        cell_size_y: 0.05,
    };
    let hm = HeatMap::new(
        spec,
        (0..100 * 100).map(|_| rng.random_range(0.0..2.0)).collect(),
    )
    .unwrap();
    let delta = OdometryDelta::new(0.33, -0.21);
    let mut group = c.benchmark_group("seq2d");
    group.throughput(Throughput::Elements(100 * 100));
    group.bench_function("translate_heatmap_100x100", |b| {
        b.iter(|| translate_heatmap(black_box(&hm), black_box(delta)))
    });
    group.finish();
}

criterion_group!(
    benches,
    bench_rotation_scores,
    bench_difference_row,
    bench_patch_normalize,
    bench_interpolate,
    bench_translate
);
criterion_main!(benches);

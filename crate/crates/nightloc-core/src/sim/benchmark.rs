//! End-to-end benchmark dataset generation.
//!
//! One call renders a day-time reference grid and a night-time query
//! trajectory through the same world, corrupts the odometry with the
//! configured model, and serializes everything in the manifest format the
//! harness loads. All randomness is derived from the named seeds, so a
//! config maps to a byte-identical dataset directory every time.

use std::f64::consts::{PI, TAU};
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::harness::manifest::{write_manifest, write_odometry, ManifestEntry};

use super::night::{apply_night_transform, NightConfig};
use super::odometry::{integrate_trajectory, NoiseModel};
use super::panorama::{render_panorama, CaptureConfig};
use super::world::{derive_seed, World, WorldConfig};
use super::Pose2D;

/// Full benchmark recipe.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkConfig {
    pub world: WorldConfig,
    pub capture: CaptureConfig,
    /// Reference survey grid: `ref_cols * ref_rows` nodes starting at
    /// `ref_origin`, spaced `ref_spacing` metres apart.
    pub ref_cols: usize,
    pub ref_rows: usize,
    pub ref_origin: (f64, f64),
    pub ref_spacing: (f64, f64),
    /// Query trajectory: serpentine walk of `query_count` frames.
    pub query_count: usize,
    pub step_m: f64,
    pub query_start: (f64, f64),
    /// When set, the trajectory visits the reference nodes themselves
    /// (self-localization datasets); `query_count`/`step_m`/`query_start`
    /// are ignored.
    pub queries_at_nodes: bool,
    pub night: NightConfig,
    /// Noise applied to the stored odometry at generation time.
    pub noise: NoiseModel,
    pub night_seed: u64,
    pub odometry_seed: u64,
}

impl Default for BenchmarkConfig {
    /// A 6x5 reference grid over a 7x5 m area inside a 10x8 m world, with
    /// a 40-frame off-node night query walk and clean stored odometry
    /// (noise models are usually swept at evaluation time instead).
    fn default() -> Self {
        Self {
            world: WorldConfig::default(),
            capture: CaptureConfig::default(),
            ref_cols: 6,
            ref_rows: 5,
            ref_origin: (1.5, 1.5),
            ref_spacing: (1.4, 1.25),
            query_count: 40,
            step_m: 0.35,
            query_start: (2.2, 2.1),
            queries_at_nodes: false,
            night: NightConfig::default(),
            noise: NoiseModel::PRESETS[0],
            night_seed: 42,
            odometry_seed: 7,
        }
    }
}

impl BenchmarkConfig {
    // `!(x > 0)`-style checks below fail NaN inputs too.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<()> {
        self.world.validate()?;
        self.capture.validate()?;
        self.night.validate()?;
        self.noise.validate()?;
        if self.ref_cols < 2 || self.ref_rows < 2 {
            return Err(Error::Config(
                "reference grid needs at least 2x2 nodes for interpolation".into(),
            ));
        }
        if !(self.ref_spacing.0 > 0.0) || !(self.ref_spacing.1 > 0.0) {
            return Err(Error::Config("reference spacing must be positive".into()));
        }
        if !self.queries_at_nodes {
            if self.query_count < 2 {
                return Err(Error::Config("query_count must be at least 2".into()));
            }
            if !(self.step_m > 0.0) {
                return Err(Error::Config("step_m must be positive".into()));
            }
        }
        Ok(())
    }

    fn reference_poses(&self) -> Vec<Pose2D> {
        let mut poses = Vec::with_capacity(self.ref_cols * self.ref_rows);
        for r in 0..self.ref_rows {
            for c in 0..self.ref_cols {
                poses.push(Pose2D::new(
                    self.ref_origin.0 + c as f64 * self.ref_spacing.0,
                    self.ref_origin.1 + r as f64 * self.ref_spacing.1,
                    0.0,
                ));
            }
        }
        poses
    }

    /// Serpentine query waypoints: rows of the reference area traversed
    /// alternately left-to-right and right-to-left.
    fn query_waypoints(&self) -> Vec<(f64, f64)> {
        if self.queries_at_nodes {
            let mut wps = Vec::with_capacity(self.ref_cols * self.ref_rows);
            for r in 0..self.ref_rows {
                let cols: Vec<usize> = if r % 2 == 0 {
                    (0..self.ref_cols).collect()
                } else {
                    (0..self.ref_cols).rev().collect()
                };
                for c in cols {
                    wps.push((
                        self.ref_origin.0 + c as f64 * self.ref_spacing.0,
                        self.ref_origin.1 + r as f64 * self.ref_spacing.1,
                    ));
                }
            }
            return wps;
        }

        let min_x = self.ref_origin.0;
        let max_x = self.ref_origin.0 + (self.ref_cols - 1) as f64 * self.ref_spacing.0;
        let max_y = self.ref_origin.1 + (self.ref_rows - 1) as f64 * self.ref_spacing.1;
        let mut wps = vec![self.query_start];
        let mut pos = self.query_start;
        let mut x_dir = 1.0;
        let mut y_dir = 1.0;
        while wps.len() < self.query_count {
            let nx = pos.0 + x_dir * self.step_m;
            if (min_x..=max_x).contains(&nx) {
                pos.0 = nx;
            } else {
                // Row finished: step once in y (bouncing off the top), then
                // come back the other way.
                if !(self.ref_origin.1..=max_y).contains(&(pos.1 + y_dir * self.step_m)) {
                    y_dir = -y_dir;
                }
                pos.1 += y_dir * self.step_m;
                x_dir = -x_dir;
            }
            wps.push(pos);
        }
        wps
    }
}

/// Waypoints to dead-reckoning steps: `(distance, heading_change)` per
/// segment, plus the start pose facing along the first segment.
fn steps_from_waypoints(wps: &[(f64, f64)]) -> (Pose2D, Vec<(f64, f64)>) {
    assert!(wps.len() >= 2, "trajectory needs at least two waypoints");
    let heading0 = (wps[1].1 - wps[0].1).atan2(wps[1].0 - wps[0].0);
    let start = Pose2D::new(wps[0].0, wps[0].1, heading0);
    let mut steps = Vec::with_capacity(wps.len() - 1);
    let mut prev_heading = heading0;
    for pair in wps.windows(2) {
        let dx = pair[1].0 - pair[0].0;
        let dy = pair[1].1 - pair[0].1;
        let heading = dy.atan2(dx);
        let mut dtheta = heading - prev_heading;
        if dtheta > PI {
            dtheta -= TAU;
        } else if dtheta < -PI {
            dtheta += TAU;
        }
        steps.push((dx.hypot(dy), dtheta));
        prev_heading = heading;
    }
    (start, steps)
}

/// Manifest and odometry paths of a generated dataset.
#[derive(Debug, Clone)]
pub struct BenchmarkPaths {
    pub references: PathBuf,
    pub queries: PathBuf,
    pub odometry: PathBuf,
}

/// Generates and serializes the full dataset under `out_dir`:
/// `refs/*.pgm` + `refs.csv`, `queries/*.pgm` + `queries.csv`, and
/// `odometry.csv` holding the reported (noise-corrupted) deltas.
pub fn make_benchmark(cfg: &BenchmarkConfig, out_dir: impl AsRef<Path>) -> Result<BenchmarkPaths> {
    cfg.validate()?;
    let out_dir = out_dir.as_ref();
    let world = World::generate(cfg.world)?;
    std::fs::create_dir_all(out_dir.join("refs"))?;
    std::fs::create_dir_all(out_dir.join("queries"))?;

    let mut ref_entries = Vec::new();
    for (i, pose) in cfg.reference_poses().into_iter().enumerate() {
        let rel = format!("refs/ref_{i:03}.pgm");
        let img = render_panorama(&world, pose, &cfg.capture)?;
        img.save_pgm(out_dir.join(&rel))?;
        ref_entries.push(ManifestEntry {
            image_path: PathBuf::from(rel),
            x: pose.x,
            y: pose.y,
            theta: pose.theta,
        });
    }
    let references = out_dir.join("refs.csv");
    write_manifest(&references, &ref_entries)?;

    let waypoints = cfg.query_waypoints();
    let (start, steps) = steps_from_waypoints(&waypoints);
    let mut odo_rng = ChaCha8Rng::seed_from_u64(cfg.odometry_seed);
    let trajectory = integrate_trajectory(start, &steps, &cfg.noise, &mut odo_rng)?;

    let mut query_entries = Vec::new();
    for (i, pose) in trajectory.poses.iter().enumerate() {
        let rel = format!("queries/query_{i:03}.pgm");
        let day = render_panorama(&world, *pose, &cfg.capture)?;
        let night = apply_night_transform(&day, &cfg.night, derive_seed(cfg.night_seed, i as u64))?;
        night.save_pgm(out_dir.join(&rel))?;
        query_entries.push(ManifestEntry {
            image_path: PathBuf::from(rel),
            x: pose.x,
            y: pose.y,
            theta: pose.theta,
        });
    }
    let queries = out_dir.join("queries.csv");
    write_manifest(&queries, &query_entries)?;
    let odometry = out_dir.join("odometry.csv");
    write_odometry(&odometry, &trajectory.reported)?;

    Ok(BenchmarkPaths {
        references,
        queries,
        odometry,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn waypoints_stay_inside_the_reference_area() {
        let cfg = BenchmarkConfig::default();
        let wps = cfg.query_waypoints();
        assert_eq!(wps.len(), 40);
        let max_x = cfg.ref_origin.0 + 5.0 * cfg.ref_spacing.0;
        let max_y = cfg.ref_origin.1 + 4.0 * cfg.ref_spacing.1;
        for &(x, y) in &wps {
            assert!(x >= cfg.ref_origin.0 - 1e-9 && x <= max_x + 1e-9);
            assert!(y >= cfg.ref_origin.1 - 1e-9 && y <= max_y + 1e-9);
        }
        // Must actually serpentine: both x directions appear.
        assert!(wps.windows(2).any(|p| p[1].0 > p[0].0));
        assert!(wps.windows(2).any(|p| p[1].0 < p[0].0));
    }

    #[test]
    fn node_mode_visits_every_node_once() {
        let cfg = BenchmarkConfig {
            queries_at_nodes: true,
            ..BenchmarkConfig::default()
        };
        let wps = cfg.query_waypoints();
        assert_eq!(wps.len(), 30);
        let mut sorted = wps.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        sorted.dedup();
        assert_eq!(sorted.len(), 30, "waypoints must be distinct nodes");
    }

    #[test]
    fn steps_reintegrate_to_the_waypoints() {
        let cfg = BenchmarkConfig::default();
        let wps = cfg.query_waypoints();
        let (start, steps) = steps_from_waypoints(&wps);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let traj =
            integrate_trajectory(start, &steps, &NoiseModel::PRESETS[0], &mut rng).unwrap();
        for (pose, wp) in traj.poses.iter().zip(&wps) {
            assert!((pose.x - wp.0).abs() < 1e-9);
            assert!((pose.y - wp.1).abs() < 1e-9);
        }
    }

    #[test]
    fn generated_dataset_has_the_expected_shape() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = BenchmarkConfig {
            query_count: 6,
            ..BenchmarkConfig::default()
        };
        let paths = make_benchmark(&cfg, dir.path()).unwrap();
        assert!(paths.references.exists());
        assert!(paths.queries.exists());
        assert!(paths.odometry.exists());
        assert_eq!(std::fs::read_dir(dir.path().join("refs")).unwrap().count(), 30);
        assert_eq!(
            std::fs::read_dir(dir.path().join("queries")).unwrap().count(),
            6
        );
    }

    #[test]
    fn same_config_generates_byte_identical_datasets() {
        let cfg = BenchmarkConfig {
            query_count: 4,
            ..BenchmarkConfig::default()
        };
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        make_benchmark(&cfg, a.path()).unwrap();
        make_benchmark(&cfg, b.path()).unwrap();
        for rel in [
            "refs.csv",
            "queries.csv",
            "odometry.csv",
            "refs/ref_000.pgm",
            "refs/ref_029.pgm",
            "queries/query_000.pgm",
            "queries/query_003.pgm",
        ] {
            let x = std::fs::read(a.path().join(rel)).unwrap();
            let y = std::fs::read(b.path().join(rel)).unwrap();
            assert_eq!(x, y, "{rel} differs between runs");
        }
    }
}

//! Synthetic test world: procedural intensity field, panoramic camera,
//! night-time degradation, odometry noise, and a one-call benchmark
//! dataset generator.
//!
//! Everything here is seed-deterministic: the same configuration always
//! produces bit-identical images, trajectories, and dataset files.

use std::f64::consts::TAU;

pub mod benchmark;
pub mod night;
pub mod odometry;
pub mod panorama;
pub mod world;

pub use benchmark::{make_benchmark, BenchmarkConfig, BenchmarkPaths};
pub use night::{apply_night_transform, NightConfig, PATCH_REFERENCE_RANGE_M};
pub use odometry::{
    apply_noise, integrate_trajectory, NoiseModel, OdometryCorruptor, Trajectory,
};
pub use panorama::{render_panorama, CaptureConfig};
pub use world::{World, WorldConfig};

/// Planar pose: position in metres, heading in radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose2D {
    pub x: f64,
    pub y: f64,
    /// Always normalized to `[0, 2*pi)`.
    pub theta: f64,
}

impl Pose2D {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Self {
            x,
            y,
            theta: theta.rem_euclid(TAU),
        }
    }
}

//! Cylindrical panorama renderer.
//!
//! Column `j` looks along bearing `theta + 2*pi*j/w`; rows sample the world
//! at `h` ranges from far (top) to near (bottom). Headings are quantized to
//! the column grid before any trigonometry, so rotating a pose by exactly
//! `2*pi/w` reproduces the same samples one column over — a bit-exact
//! circular shift, which is what makes rotation-sweep matching exact
//! end-to-end on simulated data.

use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::imgproc::RawImage;

use super::world::World;
use super::Pose2D;

/// Panorama geometry: image size and the sampled range band.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CaptureConfig {
    pub width: usize,
    pub height: usize,
    /// Nearest sampled range, metres.
    pub near_m: f64,
    /// Farthest sampled range, metres.
    pub far_m: f64,
}

impl Default for CaptureConfig {
    fn default() -> Self {
        Self {
            width: 96,
            height: 48,
            near_m: 0.75,
            far_m: 6.75,
        }
    }
}

impl CaptureConfig {
    // `!(x > 0)`-style checks below fail NaN inputs too.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<()> {
        if self.width < 2 || self.height < 1 {
            return Err(Error::Config(format!(
                "capture size must be at least 2x1, got {}x{}",
                self.width, self.height
            )));
        }
        if !(self.near_m > 0.0) || self.far_m <= self.near_m {
            return Err(Error::Config(
                "capture ranges need 0 < near_m < far_m".into(),
            ));
        }
        Ok(())
    }

    /// Mid range of the sampled band; the metric reference distance for
    /// angular-size conversions.
    pub fn mid_range_m(&self) -> f64 {
        0.5 * (self.near_m + self.far_m)
    }
}

/// Renders the world as seen from `pose`.
pub fn render_panorama(
    world: &World,
    pose: Pose2D,
    capture: &CaptureConfig,
) -> Result<RawImage> {
    capture.validate()?;
    if !world.contains(pose.x, pose.y) {
        return Err(Error::PoseOutsideWorld {
            x: pose.x,
            y: pose.y,
            width: world.config().width_m,
            height: world.config().height_m,
        });
    }
    let (w, h) = (capture.width, capture.height);
    // Quantize the heading onto the column grid. Every bearing below is
    // computed from an integer index, so equal indices give equal samples.
    let base = (pose.theta * w as f64 / TAU).round() as i64;
    let mut pixels = Vec::with_capacity(w * h);
    for i in 0..h {
        let range = capture.far_m
            - (i as f64 + 0.5) * (capture.far_m - capture.near_m) / h as f64;
        for j in 0..w {
            let index = (base + j as i64).rem_euclid(w as i64);
            let bearing = TAU * index as f64 / w as f64;
            let sx = pose.x + range * bearing.cos();
            let sy = pose.y + range * bearing.sin();
            pixels.push(world.sample(sx, sy).round() as u8);
        }
    }
    RawImage::gray(w, h, pixels)
}

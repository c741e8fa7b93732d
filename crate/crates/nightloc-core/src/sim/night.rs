//! Day-to-night photometric degradation.
//!
//! Composition order is fixed: gamma curve, global gain, illumination
//! patches, additive Gaussian pixel noise, clamp to 8 bits. Patches are
//! signed Gaussian bumps (half appear, half disappear, seeded) that wrap
//! circularly in the column direction, modeling localized lighting that
//! differs between the day reference pass and the night query pass.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::imgproc::RawImage;

/// Metric distance at which patch radii are converted to pixels: a patch of
/// radius r metres subtends `r / PATCH_REFERENCE_RANGE_M` radians.
pub const PATCH_REFERENCE_RANGE_M: f64 = 3.75;

/// Night transform parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NightConfig {
    /// Global brightness multiplier in `(0, 1]`.
    pub gain: f64,
    /// Gamma exponent applied to normalized intensity.
    pub gamma: f64,
    /// Additive Gaussian pixel noise, 8-bit intensity units.
    pub noise_sigma: f64,
    /// Number of illumination patches.
    pub patch_count: usize,
    /// Patch radius (one Gaussian sigma), metres at the reference range.
    pub patch_radius_m: f64,
    /// Peak patch amplitude, intensity units; sign is drawn per patch.
    pub patch_strength: f64,
}

impl NightConfig {
    /// No-op transform: day conditions.
    pub fn identity() -> Self {
        Self {
            gain: 1.0,
            gamma: 1.0,
            noise_sigma: 0.0,
            patch_count: 0,
            patch_radius_m: 0.5,
            patch_strength: 0.0,
        }
    }

    // `!(x > 0)`-style checks below fail NaN inputs too.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<()> {
        if !(self.gain > 0.0 && self.gain <= 1.0) {
            return Err(Error::Config("night gain must be in (0, 1]".into()));
        }
        if !(self.gamma > 0.0) {
            return Err(Error::Config("night gamma must be positive".into()));
        }
        if !(self.noise_sigma >= 0.0) {
            return Err(Error::Config("night noise_sigma must be >= 0".into()));
        }
        if self.patch_count > 0 && !(self.patch_radius_m > 0.0) {
            return Err(Error::Config("patch_radius_m must be positive".into()));
        }
        Ok(())
    }
}

impl Default for NightConfig {
    /// Benchmark night conditions: strong darkening, sensor noise, and a
    /// handful of changed illumination patches.
    fn default() -> Self {
        Self {
            gain: 0.30,
            gamma: 1.5,
            noise_sigma: 14.0,
            patch_count: 5,
            patch_radius_m: 0.9,
            patch_strength: 70.0,
        }
    }
}

/// Applies the transform. Draw order is fixed — per patch `(column, row,
/// sign)`, then per-pixel noise in row-major order — so a seed fully
/// determines the output.
pub fn apply_night_transform(img: &RawImage, t: &NightConfig, seed: u64) -> Result<RawImage> {
    t.validate()?;
    if img.channels() != 1 {
        return Err(Error::UnsupportedChannels(img.channels()));
    }
    let (w, h) = (img.width(), img.height());
    let mut values: Vec<f64> = img
        .pixels()
        .iter()
        .map(|&v| 255.0 * t.gain * (f64::from(v) / 255.0).powf(t.gamma))
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if t.patch_count > 0 {
        let sigma_px = t.patch_radius_m / PATCH_REFERENCE_RANGE_M * w as f64 / TAU;
        for _ in 0..t.patch_count {
            let cx = rng.random_range(0.0..w as f64);
            let cy = rng.random_range(0.0..h as f64);
            let amp = if rng.random::<bool>() {
                t.patch_strength
            } else {
                -t.patch_strength
            };
            for row in 0..h {
                let dy = row as f64 - cy;
                for col in 0..w {
                    let dx_raw = (col as f64 - cx).abs();
                    let dx = dx_raw.min(w as f64 - dx_raw); // circular wrap
                    let d2 = dx * dx + dy * dy;
                    values[row * w + col] += amp * (-d2 / (2.0 * sigma_px * sigma_px)).exp();
                }
            }
        }
    }
    if t.noise_sigma > 0.0 {
        let normal = Normal::new(0.0, t.noise_sigma).expect("validated sigma");
        for v in values.iter_mut() {
            *v += normal.sample(&mut rng);
        }
    }

    let pixels = values
        .into_iter()
        .map(|v| v.round().clamp(0.0, 255.0) as u8)
        .collect();
    RawImage::gray(w, h, pixels)
}

//! Procedural world texture: a deterministic, continuous 2D intensity field.
//!
//! Value noise over a seeded integer lattice, smoothstep-interpolated and
//! summed over octaves. The field is defined on all of R^2 (rays cast from
//! poses near the boundary may sample outside the extent); the extent only
//! constrains where poses may stand.

use crate::error::{Error, Result};

/// World generation parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorldConfig {
    pub seed: u64,
    /// Pose-space extent in metres.
    pub width_m: f64,
    pub height_m: f64,
    /// Metric size of the coarsest texture features.
    pub feature_scale_m: f64,
    /// Octaves of detail; each halves the amplitude and doubles the
    /// frequency of the previous one.
    pub octaves: usize,
}

impl Default for WorldConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            width_m: 10.0,
            height_m: 8.0,
            feature_scale_m: 1.6,
            octaves: 4,
        }
    }
}

impl WorldConfig {
    // `!(x > 0)`-style checks below fail NaN inputs too.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<()> {
        if !(self.width_m > 0.0) || !(self.height_m > 0.0) {
            return Err(Error::Config("world extent must be positive".into()));
        }
        if !(self.feature_scale_m > 0.0) {
            return Err(Error::Config("feature_scale_m must be positive".into()));
        }
        if self.octaves == 0 {
            return Err(Error::Config("octaves must be at least 1".into()));
        }
        Ok(())
    }
}

/// Queryable intensity field in `[0, 255]`.
#[derive(Debug, Clone)]
pub struct World {
    cfg: WorldConfig,
}

/// SplitMix64 finalizer: decorrelates consecutive integer keys.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Independent per-stream seed from a base seed and a stream index.
pub(crate) fn derive_seed(base: u64, stream: u64) -> u64 {
    mix(base ^ mix(stream))
}

fn smoothstep(t: f64) -> f64 {
    t * t * (3.0 - 2.0 * t)
}

impl World {
    pub fn generate(cfg: WorldConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self { cfg })
    }

    pub fn config(&self) -> &WorldConfig {
        &self.cfg
    }

    /// Lattice value in `[0, 1)` for one octave corner.
    fn lattice(&self, octave: u64, ix: i64, iy: i64) -> f64 {
        let key = mix(mix(mix(self.cfg.seed ^ mix(octave)) ^ ix as u64) ^ iy as u64);
        (key >> 11) as f64 / (1u64 << 53) as f64
    }

    /// Intensity at any metric coordinate, in `[0, 255]`.
    pub fn sample(&self, x: f64, y: f64) -> f64 {
        let mut freq = 1.0 / self.cfg.feature_scale_m;
        let mut amp = 1.0;
        let mut total_amp = 0.0;
        let mut value = 0.0;
        for octave in 0..self.cfg.octaves as u64 {
            let fx = x * freq;
            let fy = y * freq;
            let ix = fx.floor() as i64;
            let iy = fy.floor() as i64;
            let tx = smoothstep(fx - ix as f64);
            let ty = smoothstep(fy - iy as f64);
            let v00 = self.lattice(octave, ix, iy);
            let v10 = self.lattice(octave, ix + 1, iy);
            let v01 = self.lattice(octave, ix, iy + 1);
            let v11 = self.lattice(octave, ix + 1, iy + 1);
            let top = v00 + tx * (v10 - v00);
            let bottom = v01 + tx * (v11 - v01);
            value += amp * (top + ty * (bottom - top));
            total_amp += amp;
            amp *= 0.5;
            freq *= 2.0;
        }
        (255.0 * value / total_amp).clamp(0.0, 255.0)
    }

    /// True when a pose may stand at `(x, y)`.
    pub fn contains(&self, x: f64, y: f64) -> bool {
        (0.0..=self.cfg.width_m).contains(&x) && (0.0..=self.cfg.height_m).contains(&y)
    }
}

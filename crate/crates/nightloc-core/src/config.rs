//! Plain-text `key = value` configuration files.
//!
//! One file can describe a whole experiment: dataset generation keys and
//! evaluation keys share a single registry, each consumer reads its own
//! subset, and anything outside the registry is rejected up front so typos
//! cannot silently fall back to defaults.
//!
//! ```text
//! # night benchmark, evaluated with window 7
//! sequence_length = 7
//! noise_model = 1
//! interpolation = on
//! ```

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::harness::ExperimentConfig;
use crate::imgproc::{CropRect, PreprocessConfig};
use crate::sim::{BenchmarkConfig, CaptureConfig, NightConfig, NoiseModel, WorldConfig};

/// Every key any consumer understands.
const KNOWN_KEYS: &[&str] = &[
    // preprocessing
    "match_width",
    "match_height",
    "patch_radius",
    "crop_left",
    "crop_top",
    "crop_width",
    "crop_height",
    // evaluation
    "grid_cols",
    "grid_rows",
    "sequence_length",
    "noise_model",
    "noise_seed",
    "interpolation",
    "tolerance_m",
    "workers",
    // world + capture
    "world_seed",
    "world_width_m",
    "world_height_m",
    "feature_scale_m",
    "octaves",
    "capture_width",
    "capture_height",
    "near_m",
    "far_m",
    // reference survey + query trajectory
    "ref_cols",
    "ref_rows",
    "ref_origin_x",
    "ref_origin_y",
    "ref_spacing_x",
    "ref_spacing_y",
    "query_count",
    "step_m",
    "query_start_x",
    "query_start_y",
    "queries_at_nodes",
    // night transform + generation seeds
    "night_gain",
    "night_gamma",
    "night_noise_sigma",
    "night_patch_count",
    "night_patch_radius_m",
    "night_patch_strength",
    "sim_noise_model",
    "night_seed",
    "odometry_seed",
];

/// Parsed, registry-checked key/value pairs.
#[derive(Debug, Clone, Default)]
pub struct FileConfig {
    map: BTreeMap<String, String>,
}

impl FileConfig {
    /// Parses `key = value` lines. `#` starts a comment line; blank lines
    /// are skipped; keys must be unique and known.
    pub fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Config(format!(
                    "line {}: expected `key = value`, got {line:?}",
                    i + 1
                )));
            };
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(Error::Config(format!("line {}: unknown key {key:?}", i + 1)));
            }
            if map.insert(key.clone(), value).is_some() {
                return Err(Error::Config(format!("line {}: duplicate key {key:?}", i + 1)));
            }
        }
        Ok(Self { map })
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())?;
        Self::parse(&text).map_err(|e| match e {
            Error::Config(msg) => {
                Error::Config(format!("{}: {msg}", path.as_ref().display()))
            }
            other => other,
        })
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        debug_assert!(KNOWN_KEYS.contains(&key), "getter uses unregistered key {key}");
        match self.map.get(key) {
            None => Ok(None),
            Some(raw) => raw.parse::<T>().map(Some).map_err(|e| {
                Error::Config(format!("key {key:?}: bad value {raw:?}: {e}"))
            }),
        }
    }

    fn get_bool(&self, key: &str) -> Result<Option<bool>> {
        match self.map.get(key).map(|s| s.to_ascii_lowercase()) {
            None => Ok(None),
            Some(v) => match v.as_str() {
                "true" | "1" | "on" | "yes" => Ok(Some(true)),
                "false" | "0" | "off" | "no" => Ok(Some(false)),
                _ => Err(Error::Config(format!("key {key:?}: bad boolean {v:?}"))),
            },
        }
    }

    fn preprocess_config(&self) -> Result<PreprocessConfig> {
        let mut cfg = PreprocessConfig::default();
        if let Some(v) = self.get("match_width")? {
            cfg.match_width = v;
        }
        if let Some(v) = self.get("match_height")? {
            cfg.match_height = v;
        }
        if let Some(v) = self.get("patch_radius")? {
            cfg.patch_radius = v;
        }
        let crop = [
            self.get::<usize>("crop_left")?,
            self.get::<usize>("crop_top")?,
            self.get::<usize>("crop_width")?,
            self.get::<usize>("crop_height")?,
        ];
        cfg.crop_rect = match crop {
            [None, None, None, None] => None,
            [Some(left), Some(top), Some(width), Some(height)] => Some(CropRect {
                left,
                top,
                width,
                height,
            }),
            _ => {
                return Err(Error::Config(
                    "crop needs all of crop_left/crop_top/crop_width/crop_height".into(),
                ))
            }
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Evaluation recipe: defaults overridden by whatever keys are present.
    pub fn experiment_config(&self) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig {
            preprocess: self.preprocess_config()?,
            ..ExperimentConfig::default()
        };
        if let Some(v) = self.get("grid_cols")? {
            cfg.grid_cols = v;
        }
        if let Some(v) = self.get("grid_rows")? {
            cfg.grid_rows = v;
        }
        if let Some(v) = self.get("sequence_length")? {
            cfg.sequence_length = v;
        }
        if let Some(v) = self.get("noise_model")? {
            cfg.noise_model = v;
            NoiseModel::preset(v)?;
        }
        if let Some(v) = self.get("noise_seed")? {
            cfg.noise_seed = v;
        }
        if let Some(v) = self.get_bool("interpolation")? {
            cfg.interpolation = v;
        }
        if let Some(v) = self.get("tolerance_m")? {
            cfg.tolerance_m = v;
        }
        if let Some(v) = self.get("workers")? {
            cfg.workers = v;
        }
        Ok(cfg)
    }

    /// Dataset generation recipe: defaults overridden by present keys.
    pub fn benchmark_config(&self) -> Result<BenchmarkConfig> {
        let mut world = WorldConfig::default();
        if let Some(v) = self.get("world_seed")? {
            world.seed = v;
        }
        if let Some(v) = self.get("world_width_m")? {
            world.width_m = v;
        }
        if let Some(v) = self.get("world_height_m")? {
            world.height_m = v;
        }
        if let Some(v) = self.get("feature_scale_m")? {
            world.feature_scale_m = v;
        }
        if let Some(v) = self.get("octaves")? {
            world.octaves = v;
        }

        let mut capture = CaptureConfig::default();
        if let Some(v) = self.get("capture_width")? {
            capture.width = v;
        }
        if let Some(v) = self.get("capture_height")? {
            capture.height = v;
        }
        if let Some(v) = self.get("near_m")? {
            capture.near_m = v;
        }
        if let Some(v) = self.get("far_m")? {
            capture.far_m = v;
        }

        let mut night = NightConfig::default();
        if let Some(v) = self.get("night_gain")? {
            night.gain = v;
        }
        if let Some(v) = self.get("night_gamma")? {
            night.gamma = v;
        }
        if let Some(v) = self.get("night_noise_sigma")? {
            night.noise_sigma = v;
        }
        if let Some(v) = self.get("night_patch_count")? {
            night.patch_count = v;
        }
        if let Some(v) = self.get("night_patch_radius_m")? {
            night.patch_radius_m = v;
        }
        if let Some(v) = self.get("night_patch_strength")? {
            night.patch_strength = v;
        }

        let mut cfg = BenchmarkConfig {
            world,
            capture,
            night,
            ..BenchmarkConfig::default()
        };
        if let Some(v) = self.get("ref_cols")? {
            cfg.ref_cols = v;
        }
        if let Some(v) = self.get("ref_rows")? {
            cfg.ref_rows = v;
        }
        if let Some(v) = self.get("ref_origin_x")? {
            cfg.ref_origin.0 = v;
        }
        if let Some(v) = self.get("ref_origin_y")? {
            cfg.ref_origin.1 = v;
        }
        if let Some(v) = self.get("ref_spacing_x")? {
            cfg.ref_spacing.0 = v;
        }
        if let Some(v) = self.get("ref_spacing_y")? {
            cfg.ref_spacing.1 = v;
        }
        if let Some(v) = self.get("query_count")? {
            cfg.query_count = v;
        }
        if let Some(v) = self.get("step_m")? {
            cfg.step_m = v;
        }
        if let Some(v) = self.get("query_start_x")? {
            cfg.query_start.0 = v;
        }
        if let Some(v) = self.get("query_start_y")? {
            cfg.query_start.1 = v;
        }
        if let Some(v) = self.get_bool("queries_at_nodes")? {
            cfg.queries_at_nodes = v;
        }
        if let Some(v) = self.get("sim_noise_model")? {
            cfg.noise = NoiseModel::preset(v)?;
        }
        if let Some(v) = self.get("night_seed")? {
            cfg.night_seed = v;
        }
        if let Some(v) = self.get("odometry_seed")? {
            cfg.odometry_seed = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

//! 2D sequence localization: odometry-aligned accumulation of heat maps.
//!
//! Single-frame heat maps are noisy at night; summing the last
//! `window_length` maps sharpens the true peak, provided each stored map is
//! first translated by the robot's motion so that old evidence lines up with
//! the current pose. The window therefore keeps every map pre-aligned to the
//! latest frame: one bilinear translation per stored map per update, then an
//! elementwise sum.
//!
//! Sums run over similarity (inverted) maps, so the 0 used to fill regions
//! translated in from outside the grid is neutral: it never outvotes real
//! evidence.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::heatmap::{best_match, closest_reference, GridSpec, HeatMap, Interpolator, ReferenceMap};
use crate::imgproc::ProcessedImage;
use crate::matcher::{invert_scores, match_query, DifferenceRow};

/// Robot displacement between consecutive query captures, in the map frame.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct OdometryDelta {
    pub dx: f64,
    pub dy: f64,
}

impl OdometryDelta {
    pub const ZERO: Self = Self { dx: 0.0, dy: 0.0 };

    pub fn new(dx: f64, dy: f64) -> Self {
        Self { dx, dy }
    }
}

/// Sequence-matching parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SequenceConfig {
    /// Number of consecutive heat maps summed per estimate; 1 disables
    /// sequence matching.
    pub window_length: usize,
}

impl Default for SequenceConfig {
    fn default() -> Self {
        Self { window_length: 7 }
    }
}

impl SequenceConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window_length < 1 {
            return Err(Error::Config("window_length must be at least 1".into()));
        }
        Ok(())
    }
}

/// Resamples the map at positions shifted by `-delta`: a peak at the
/// robot's previous location moves with the robot. Fractional-cell shifts
/// use bilinear weights; source samples outside the grid contribute 0.
pub fn translate_heatmap(hm: &HeatMap, delta: OdometryDelta) -> HeatMap {
    let spec = *hm.spec();
    let fx = delta.dx / spec.cell_size_x;
    let fy = delta.dy / spec.cell_size_y;
    let (cols, rows) = (spec.cols as isize, spec.rows as isize);
    let at = |col: isize, row: isize| -> f64 {
        if col < 0 || row < 0 || col >= cols || row >= rows {
            0.0
        } else {
            hm.values()[row as usize * spec.cols + col as usize]
        }
    };
    let mut values = Vec::with_capacity(hm.values().len());
    for row in 0..spec.rows {
        let sy = row as f64 - fy;
        let y0 = sy.floor();
        let u = sy - y0;
        for col in 0..spec.cols {
            let sx = col as f64 - fx;
            let x0 = sx.floor();
            let t = sx - x0;
            let (xi, yi) = (x0 as isize, y0 as isize);
            let v = (1.0 - t) * (1.0 - u) * at(xi, yi)
                + t * (1.0 - u) * at(xi + 1, yi)
                + (1.0 - t) * u * at(xi, yi + 1)
                + t * u * at(xi + 1, yi + 1);
            values.push(v);
        }
    }
    HeatMap::new(spec, values).expect("translation preserves shape and non-negativity")
}

/// Sliding window of heat maps, each pre-aligned to the latest frame.
#[derive(Debug, Clone)]
pub struct SequenceState {
    config: SequenceConfig,
    window: VecDeque<HeatMap>,
}

impl SequenceState {
    pub fn new(config: SequenceConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            window: VecDeque::with_capacity(config.window_length),
        })
    }

    pub fn config(&self) -> &SequenceConfig {
        &self.config
    }

    /// Number of maps currently held: `min(updates so far, window_length)`.
    pub fn len(&self) -> usize {
        self.window.len()
    }

    pub fn is_empty(&self) -> bool {
        self.window.is_empty()
    }

    /// Advances the window by one frame: translates every stored map by
    /// `delta`, appends `current`, evicts beyond `window_length`
    /// oldest-first, and returns the elementwise sum of the window.
    ///
    /// On the first update the window is empty, so `delta` has nothing to
    /// move and is effectively ignored.
    pub fn update(&mut self, current: HeatMap, delta: OdometryDelta) -> Result<HeatMap> {
        if let Some(stored) = self.window.front() {
            if stored.spec() != current.spec() {
                return Err(Error::GridSpecMismatch);
            }
        }
        for stored in self.window.iter_mut() {
            *stored = translate_heatmap(stored, delta);
        }
        self.window.push_back(current);
        if self.window.len() > self.config.window_length {
            self.window.pop_front();
        }

        let spec = *self.window[0].spec();
        let mut sums = vec![0.0; spec.cell_count()];
        for map in &self.window {
            for (acc, &v) in sums.iter_mut().zip(map.values()) {
                *acc += v;
            }
        }
        HeatMap::new(spec, sums)
    }
}

/// Result of one sequence-localization step.
#[derive(Debug, Clone)]
pub struct LocalizeOutcome {
    /// Best-match position: center of the combined map's maximal cell.
    pub position: (f64, f64),
    /// Nearest reference node to `position`.
    pub node_id: usize,
    /// The summed window map the estimate came from.
    pub combined: HeatMap,
    /// The query's raw difference row (scores + best rotations per node).
    pub difference_row: DifferenceRow,
}

/// Full per-frame pipeline against a fixed reference map: match, invert,
/// interpolate, accumulate, extract position and closest node.
#[derive(Debug)]
pub struct SequenceLocalizer<'a> {
    map: &'a ReferenceMap,
    interpolator: Interpolator,
    state: SequenceState,
    frames_seen: usize,
}

impl<'a> SequenceLocalizer<'a> {
    pub fn new(map: &'a ReferenceMap, spec: &GridSpec, config: SequenceConfig) -> Result<Self> {
        Ok(Self {
            map,
            interpolator: Interpolator::new(map, spec)?,
            state: SequenceState::new(config)?,
            frames_seen: 0,
        })
    }

    pub fn state(&self) -> &SequenceState {
        &self.state
    }

    /// Processes the next query frame. `delta` is the odometry displacement
    /// since the previous frame (ignored on the first).
    pub fn localize(
        &mut self,
        query: &ProcessedImage,
        delta: OdometryDelta,
    ) -> Result<LocalizeOutcome> {
        let row = match_query(query, self.map, self.frames_seen)?;
        self.frames_seen += 1;
        let inverted = invert_scores(&row);
        let frame_map = self.interpolator.interpolate(&inverted)?;
        let combined = self.state.update(frame_map, delta)?;
        let position = best_match(&combined);
        let node_id = closest_reference(position, self.map);
        Ok(LocalizeOutcome {
            position,
            node_id,
            combined,
            difference_row: row,
        })
    }
}

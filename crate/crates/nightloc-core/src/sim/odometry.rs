//! Odometry noise models and dead-reckoning trajectory integration.
//!
//! Noise corrupts each step's distance and heading-change reading with
//! independent zero-mean Gaussians. Heading errors integrate: the reported
//! pose drifts further from truth the longer the trajectory, which is
//! exactly the failure mode sequence matching has to survive.

use std::f64::consts::TAU;

use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::seq2d::OdometryDelta;

use super::Pose2D;

/// Per-step Gaussian odometry corruption (zero mean).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    pub distance_sigma: f64,
    pub heading_sigma: f64,
}

impl NoiseModel {
    /// The four standard models, indexed 0-3, from clean to severe:
    /// (0, 0), (0.1, 0.02), (0.25, 0.05), (0.5, 0.1).
    pub const PRESETS: [NoiseModel; 4] = [
        NoiseModel {
            distance_sigma: 0.0,
            heading_sigma: 0.0,
        },
        NoiseModel {
            distance_sigma: 0.1,
            heading_sigma: 0.02,
        },
        NoiseModel {
            distance_sigma: 0.25,
            heading_sigma: 0.05,
        },
        NoiseModel {
            distance_sigma: 0.5,
            heading_sigma: 0.1,
        },
    ];

    pub fn preset(index: usize) -> Result<Self> {
        Self::PRESETS
            .get(index)
            .copied()
            .ok_or_else(|| Error::Config(format!("noise model index {index} not in 0..=3")))
    }

    // `!(x > 0)`-style checks below fail NaN inputs too.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<()> {
        if !(self.distance_sigma >= 0.0) || !(self.heading_sigma >= 0.0) {
            return Err(Error::Config("noise sigmas must be >= 0".into()));
        }
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        self.distance_sigma == 0.0 && self.heading_sigma == 0.0
    }
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self::PRESETS[0]
    }
}

/// Corrupts one `(distance, heading_change)` step. Zero-sigma components
/// pass through bit-exactly and draw nothing from the stream.
pub fn apply_noise(
    delta: (f64, f64),
    model: &NoiseModel,
    rng: &mut ChaCha8Rng,
) -> Result<(f64, f64)> {
    model.validate()?;
    let (mut distance, mut heading) = delta;
    if model.distance_sigma > 0.0 {
        let normal = Normal::new(0.0, model.distance_sigma).expect("validated sigma");
        distance += normal.sample(rng);
    }
    if model.heading_sigma > 0.0 {
        let normal = Normal::new(0.0, model.heading_sigma).expect("validated sigma");
        heading += normal.sample(rng);
    }
    Ok((distance, heading))
}

/// Result of integrating a step sequence: ground truth and what the noisy
/// odometer reported.
#[derive(Debug, Clone)]
pub struct Trajectory {
    /// True poses, `steps.len() + 1` entries including the start.
    pub poses: Vec<Pose2D>,
    /// Reported map-frame displacement per step (noise applied).
    pub reported: Vec<OdometryDelta>,
}

/// Dead-reckoning integration: each step updates the heading, then advances
/// `distance` along it. True poses integrate the clean steps; reported
/// deltas integrate the noisy ones, so heading noise accumulates into drift.
pub fn integrate_trajectory(
    start: Pose2D,
    steps: &[(f64, f64)],
    model: &NoiseModel,
    rng: &mut ChaCha8Rng,
) -> Result<Trajectory> {
    model.validate()?;
    let mut poses = Vec::with_capacity(steps.len() + 1);
    poses.push(start);
    let mut reported = Vec::with_capacity(steps.len());
    let mut pose = start;
    let mut noisy_heading = start.theta;
    for &(distance, dtheta) in steps {
        let heading = (pose.theta + dtheta).rem_euclid(TAU);
        pose = Pose2D::new(
            pose.x + distance * heading.cos(),
            pose.y + distance * heading.sin(),
            heading,
        );
        poses.push(pose);

        let (noisy_distance, noisy_dtheta) = apply_noise((distance, dtheta), model, rng)?;
        noisy_heading = (noisy_heading + noisy_dtheta).rem_euclid(TAU);
        reported.push(OdometryDelta::new(
            noisy_distance * noisy_heading.cos(),
            noisy_distance * noisy_heading.sin(),
        ));
    }
    Ok(Trajectory { poses, reported })
}

/// Re-corrupts a clean map-frame delta stream with a noise model, for
/// sweeping models over one stored dataset. Reconstructs per-step
/// `(distance, heading_change)` readings from the deltas, corrupts them,
/// and re-integrates — heading drift accumulates exactly as it does in
/// [`integrate_trajectory`]. Model 0 passes deltas through bit-exactly.
#[derive(Debug)]
pub struct OdometryCorruptor {
    model: NoiseModel,
    rng: ChaCha8Rng,
    true_heading: Option<f64>,
    reported_heading: f64,
}

impl OdometryCorruptor {
    pub fn new(model: NoiseModel, seed: u64) -> Result<Self> {
        model.validate()?;
        Ok(Self {
            model,
            rng: rand::SeedableRng::seed_from_u64(seed),
            true_heading: None,
            reported_heading: 0.0,
        })
    }

    pub fn corrupt(&mut self, delta: OdometryDelta) -> Result<OdometryDelta> {
        if self.model.is_zero() {
            return Ok(delta);
        }
        let distance = delta.dx.hypot(delta.dy);
        let heading = delta.dy.atan2(delta.dx).rem_euclid(TAU);
        let dtheta = match self.true_heading {
            // First step: no previous heading to difference against.
            None => {
                self.reported_heading = heading;
                0.0
            }
            Some(prev) => {
                let mut d = heading - prev;
                if d > std::f64::consts::PI {
                    d -= TAU;
                } else if d < -std::f64::consts::PI {
                    d += TAU;
                }
                d
            }
        };
        self.true_heading = Some(heading);

        let (noisy_distance, noisy_dtheta) = apply_noise((distance, dtheta), &self.model, &mut self.rng)?;
        self.reported_heading = (self.reported_heading + noisy_dtheta).rem_euclid(TAU);
        Ok(OdometryDelta::new(
            noisy_distance * self.reported_heading.cos(),
            noisy_distance * self.reported_heading.sin(),
        ))
    }
}

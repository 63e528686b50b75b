//! Synthetic LiDAR scans of cylindrical poles.
//!
//! A pole is scanned in its own canonical frame, where its axis is the z-axis
//! and the sensor sits on +x at distance `x_p`. Each channel is a plane through
//! the sensor; the plane cuts the cylinder in a curve that is marched with a
//! constant angular step as seen from the sensor. Points are then carried back
//! to the sensor frame and perturbed with Gaussian noise.

mod beam;
mod canonical;
mod scene;

pub use beam::{
    cone_ray, cylinder_curve_point, march_beam_points, raycast_cylinder, tilted_scan_normal,
};
pub use canonical::{canonicalize_pole_frame, Degeneracy, PoleFrame};
pub use scene::{
    environment_points, generate_labeled_scan, generate_scan, noiseless_pole_returns, random_scenario,
    reference_lidar_poses,
    stream_rng, PointLabel, Scenario, SimulatedScan, REFERENCE_Q1, REFERENCE_Q2,
};

use thiserror::Error;

use crate::geometry::{GeometryError, Line3, Vec3};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid LiDAR model: {0}")]
    InvalidModel(String),
    #[error("invalid pole: {0}")]
    InvalidPole(String),
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),
    #[error("no visible arc: radius {radius} is not smaller than sensor distance {x_p}")]
    NoVisibleArc { radius: f64, x_p: f64 },
    #[error("pole {pole}: {source}")]
    Pole {
        pole: usize,
        #[source]
        source: Box<SimError>,
    },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Multi-channel spinning LiDAR.
#[derive(Clone, Debug, PartialEq)]
pub struct LidarModel {
    /// Channel elevation angles, radians, strictly increasing.
    pub channel_elevations: Vec<f64>,
    /// Angle between consecutive returns of one channel, radians.
    pub azimuth_resolution: f64,
    pub max_range: f64,
    /// Standard deviation of the per-coordinate Gaussian noise, meters.
    pub noise_sigma: f64,
}

impl LidarModel {
    /// 16 channels from −15° to +15° every 2°, 0.2° azimuth step.
    pub fn vlp16(noise_sigma: f64) -> Self {
        Self {
            channel_elevations: (0..16)
                .map(|i| (-15.0 + 2.0 * i as f64).to_radians())
                .collect(),
            azimuth_resolution: 0.2f64.to_radians(),
            max_range: 100.0,
            noise_sigma,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.azimuth_resolution > 0.0) {
            return Err(SimError::InvalidModel(format!(
                "azimuth resolution must be positive, got {}",
                self.azimuth_resolution
            )));
        }
        if self.channel_elevations.is_empty() {
            return Err(SimError::InvalidModel("no channels".into()));
        }
        if self.channel_elevations.windows(2).any(|w| w[1] <= w[0]) {
            return Err(SimError::InvalidModel(
                "channel elevations must be strictly increasing".into(),
            ));
        }
        if !(self.noise_sigma >= 0.0) {
            return Err(SimError::InvalidModel(format!(
                "noise sigma must be non-negative, got {}",
                self.noise_sigma
            )));
        }
        if !(self.max_range > 0.0) {
            return Err(SimError::InvalidModel("max range must be positive".into()));
        }
        Ok(())
    }
}

/// A straight cylindrical pole in world coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct PoleSpec {
    pub anchor: Vec3,
    /// Unit axis direction.
    pub direction: Vec3,
    pub radius: f64,
    /// World-z interval covered by the pole.
    pub z_extent: [f64; 2],
    /// Retro-reflective poles return intensity 255.
    pub reflective: bool,
}

impl PoleSpec {
    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.radius > 0.0) {
            return Err(SimError::InvalidPole(format!(
                "radius must be positive, got {}",
                self.radius
            )));
        }
        if (self.direction.norm() - 1.0).abs() > 1e-9 {
            return Err(SimError::InvalidPole(format!(
                "direction must be unit, norm is {}",
                self.direction.norm()
            )));
        }
        if !(self.z_extent[0] < self.z_extent[1]) {
            return Err(SimError::InvalidPole(format!(
                "empty z extent {:?}",
                self.z_extent
            )));
        }
        Ok(())
    }

    pub fn axis(&self) -> Line3 {
        Line3::new(self.anchor, self.direction).expect("validated pole direction")
    }
}

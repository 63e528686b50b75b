//! Point clouds with per-point intensity and an optional ring index.

use thiserror::Error;

use crate::geometry::{RigidTransform, Vec3};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CloudError {
    #[error("parallel arrays differ in length: {points} points, {other} {what}")]
    LengthMismatch {
        points: usize,
        other: usize,
        what: &'static str,
    },
    #[error("point {0} has a non-finite coordinate")]
    NonFinitePoint(usize),
    #[error("intensity {value} at point {index} is outside [0, 255]")]
    IntensityOutOfRange { index: usize, value: f64 },
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct PointCloud {
    points: Vec<Vec3>,
    intensities: Vec<f64>,
    ring: Option<Vec<u16>>,
}

impl PointCloud {
    pub fn new(
        points: Vec<Vec3>,
        intensities: Vec<f64>,
        ring: Option<Vec<u16>>,
    ) -> Result<Self, CloudError> {
        if intensities.len() != points.len() {
            return Err(CloudError::LengthMismatch {
                points: points.len(),
                other: intensities.len(),
                what: "intensities",
            });
        }
        if let Some(r) = &ring {
            if r.len() != points.len() {
                return Err(CloudError::LengthMismatch {
                    points: points.len(),
                    other: r.len(),
                    what: "ring indices",
                });
            }
        }
        if let Some(i) = points.iter().position(|p| p.iter().any(|v| !v.is_finite())) {
            return Err(CloudError::NonFinitePoint(i));
        }
        if let Some((index, &value)) = intensities
            .iter()
            .enumerate()
            .find(|(_, v)| !(0.0..=255.0).contains(*v))
        {
            return Err(CloudError::IntensityOutOfRange { index, value });
        }
        Ok(Self {
            points,
            intensities,
            ring,
        })
    }

    /// A cloud with a constant intensity and no ring channel.
    pub fn from_points(points: Vec<Vec3>, intensity: f64) -> Result<Self, CloudError> {
        let n = points.len();
        Self::new(points, vec![intensity; n], None)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec3] {
        &self.points
    }

    pub fn intensities(&self) -> &[f64] {
        &self.intensities
    }

    pub fn ring(&self) -> Option<&[u16]> {
        self.ring.as_deref()
    }

    /// Sub-cloud of the given indices, in the given order.
    pub fn select(&self, indices: &[usize]) -> PointCloud {
        PointCloud {
            points: indices.iter().map(|&i| self.points[i]).collect(),
            intensities: indices.iter().map(|&i| self.intensities[i]).collect(),
            ring: self
                .ring
                .as_ref()
                .map(|r| indices.iter().map(|&i| r[i]).collect()),
        }
    }

    pub fn transformed(&self, t: &RigidTransform) -> PointCloud {
        PointCloud {
            points: self.points.iter().map(|p| t.apply(p)).collect(),
            intensities: self.intensities.clone(),
            ring: self.ring.clone(),
        }
    }

    /// Concatenates `other` after `self`. The ring channel survives only if
    /// both clouds carry one.
    pub fn merged(&self, other: &PointCloud) -> PointCloud {
        let ring = match (&self.ring, &other.ring) {
            (Some(a), Some(b)) => Some(a.iter().chain(b).copied().collect()),
            _ => None,
        };
        PointCloud {
            points: self.points.iter().chain(&other.points).copied().collect(),
            intensities: self
                .intensities
                .iter()
                .chain(&other.intensities)
                .copied()
                .collect(),
            ring,
        }
    }

    /// Every `stride`-th point such that at most `max` points remain.
    pub fn stride_subsample(&self, max: usize) -> PointCloud {
        if self.len() <= max || max == 0 {
            return self.clone();
        }
        let stride = self.len().div_ceil(max);
        let idx: Vec<usize> = (0..self.len()).step_by(stride).collect();
        self.select(&idx)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_mismatched_and_invalid_input() {
        let p = vec![Vec3::zeros(); 2];
        assert!(matches!(
            PointCloud::new(p.clone(), vec![0.0], None),
            Err(CloudError::LengthMismatch { .. })
        ));
        assert!(matches!(
            PointCloud::new(p.clone(), vec![0.0; 2], Some(vec![0])),
            Err(CloudError::LengthMismatch { .. })
        ));
        assert!(matches!(
            PointCloud::new(vec![Vec3::new(f64::NAN, 0.0, 0.0)], vec![1.0], None),
            Err(CloudError::NonFinitePoint(0))
        ));
        assert!(matches!(
            PointCloud::new(p, vec![0.0, 300.0], None),
            Err(CloudError::IntensityOutOfRange { index: 1, .. })
        ));
    }

    #[test]
    fn stride_subsample_bounds_size() {
        let pts: Vec<Vec3> = (0..10_001).map(|i| Vec3::new(i as f64, 0.0, 0.0)).collect();
        let c = PointCloud::from_points(pts, 1.0).unwrap();
        let s = c.stride_subsample(5000);
        assert!(s.len() <= 5000);
        assert_eq!(s.points()[1].x, 3.0);
        assert_eq!(c.stride_subsample(20_000).len(), c.len());
    }

    #[test]
    fn merge_keeps_ring_only_when_both_have_it() {
        let a = PointCloud::new(vec![Vec3::zeros()], vec![1.0], Some(vec![3])).unwrap();
        let b = PointCloud::from_points(vec![Vec3::x()], 2.0).unwrap();
        assert!(a.merged(&b).ring().is_none());
        assert_eq!(a.merged(&a).ring(), Some(&[3u16, 3][..]));
    }
}

//! Rotation and rigid-transform algebra, lines, and the SO(3) exp/log maps.

use std::ops::Mul;

use nalgebra::{Matrix3, Vector3};
use thiserror::Error;

/// A 3-vector in meters (positions) or unitless (directions).
pub type Vec3 = Vector3<f64>;
/// A 3×3 real matrix.
pub type Mat3 = Matrix3<f64>;

/// Below this angle `exp`/`log` switch to their series expansions.
const SMALL_ANGLE: f64 = 1e-4;
/// Within this distance of π `log` extracts the axis from the symmetric part.
const NEAR_PI: f64 = 1e-3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("expected a unit vector, got norm {0}")]
    NonUnitAxis(f64),
    #[error("vector has zero length")]
    ZeroVector,
    #[error("non-finite component")]
    NonFinite,
    #[error("quaternion has zero norm")]
    ZeroQuaternion,
    #[error("matrix is not a proper rotation (orthogonality error {orthogonality:e}, det {det})")]
    NotARotation { orthogonality: f64, det: f64 },
}

/// Skew-symmetric cross-product matrix `[v]×`.
pub fn hat(v: &Vec3) -> Mat3 {
    Mat3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Inverse of [`hat`]; reads the antisymmetric part of `m`.
pub fn vee(m: &Mat3) -> Vec3 {
    Vec3::new(
        0.5 * (m[(2, 1)] - m[(1, 2)]),
        0.5 * (m[(0, 2)] - m[(2, 0)]),
        0.5 * (m[(1, 0)] - m[(0, 1)]),
    )
}

/// A proper rotation stored as an orthonormal matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rotation {
    matrix: Mat3,
}

impl Default for Rotation {
    fn default() -> Self {
        Self::identity()
    }
}

impl Rotation {
    pub fn identity() -> Self {
        Self {
            matrix: Mat3::identity(),
        }
    }

    /// Accepts `m` if `mᵀm = I` and `det m = +1`, both within 1e-9.
    pub fn from_matrix(m: Mat3) -> Result<Self, GeometryError> {
        if m.iter().any(|v| !v.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        let orthogonality = (m.transpose() * m - Mat3::identity()).abs().max();
        let det = m.determinant();
        if orthogonality > 1e-9 || (det - 1.0).abs() > 1e-9 {
            return Err(GeometryError::NotARotation { orthogonality, det });
        }
        Ok(Self { matrix: m })
    }

    /// Nearest rotation to an arbitrary 3×3 matrix.
    pub fn nearest_to(m: &Mat3) -> Self {
        Self { matrix: *m }.renormalized()
    }

    /// Builds a rotation from `[w, x, y, z]`. The input is normalized, so
    /// quaternions quoted to a few decimals are accepted.
    pub fn from_quaternion(q: [f64; 4]) -> Result<Self, GeometryError> {
        if q.iter().any(|v| !v.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        let n = q.iter().map(|v| v * v).sum::<f64>().sqrt();
        if n < 1e-12 {
            return Err(GeometryError::ZeroQuaternion);
        }
        let [w, x, y, z] = q.map(|v| v / n);
        let m = Mat3::new(
            1.0 - 2.0 * (y * y + z * z),
            2.0 * (x * y - w * z),
            2.0 * (x * z + w * y),
            2.0 * (x * y + w * z),
            1.0 - 2.0 * (x * x + z * z),
            2.0 * (y * z - w * x),
            2.0 * (x * z - w * y),
            2.0 * (y * z + w * x),
            1.0 - 2.0 * (x * x + y * y),
        );
        Ok(Self { matrix: m })
    }

    /// Unit quaternion `[w, x, y, z]` with `w ≥ 0`.
    pub fn to_quaternion(&self) -> [f64; 4] {
        let m = &self.matrix;
        let tr = m.trace();
        let mut q = if tr > 0.0 {
            let s = 2.0 * (tr + 1.0).sqrt();
            [
                0.25 * s,
                (m[(2, 1)] - m[(1, 2)]) / s,
                (m[(0, 2)] - m[(2, 0)]) / s,
                (m[(1, 0)] - m[(0, 1)]) / s,
            ]
        } else if m[(0, 0)] > m[(1, 1)] && m[(0, 0)] > m[(2, 2)] {
            let s = 2.0 * (1.0 + m[(0, 0)] - m[(1, 1)] - m[(2, 2)]).sqrt();
            [
                (m[(2, 1)] - m[(1, 2)]) / s,
                0.25 * s,
                (m[(0, 1)] + m[(1, 0)]) / s,
                (m[(0, 2)] + m[(2, 0)]) / s,
            ]
        } else if m[(1, 1)] > m[(2, 2)] {
            let s = 2.0 * (1.0 + m[(1, 1)] - m[(0, 0)] - m[(2, 2)]).sqrt();
            [
                (m[(0, 2)] - m[(2, 0)]) / s,
                (m[(0, 1)] + m[(1, 0)]) / s,
                0.25 * s,
                (m[(1, 2)] + m[(2, 1)]) / s,
            ]
        } else {
            let s = 2.0 * (1.0 + m[(2, 2)] - m[(0, 0)] - m[(1, 1)]).sqrt();
            [
                (m[(1, 0)] - m[(0, 1)]) / s,
                (m[(0, 2)] + m[(2, 0)]) / s,
                (m[(1, 2)] + m[(2, 1)]) / s,
                0.25 * s,
            ]
        };
        if q[0] < 0.0 {
            q = q.map(|v| -v);
        }
        let n = q.iter().map(|v| v * v).sum::<f64>().sqrt();
        q.map(|v| v / n)
    }

    /// Rotation by `angle` radians about the unit `axis` (Rodrigues).
    pub fn from_axis_angle(axis: &Vec3, angle: f64) -> Result<Self, GeometryError> {
        let n = axis.norm();
        if n < 1e-15 {
            return Err(GeometryError::ZeroVector);
        }
        let a = axis / n;
        let k = hat(&a);
        let m = Mat3::identity() + k * angle.sin() + k * k * (1.0 - angle.cos());
        Ok(Self { matrix: m })
    }

    /// Exponential map from an axis-angle vector.
    pub fn exp(omega: &Vec3) -> Self {
        let theta2 = omega.norm_squared();
        let theta = theta2.sqrt();
        let k = hat(omega);
        let (a, b) = if theta < SMALL_ANGLE {
            (1.0 - theta2 / 6.0, 0.5 - theta2 / 24.0)
        } else {
            (theta.sin() / theta, (1.0 - theta.cos()) / theta2)
        };
        Self {
            matrix: Mat3::identity() + k * a + k * k * b,
        }
    }

    /// Logarithm map: the axis-angle vector with norm in `[0, π]`.
    pub fn log(&self) -> Vec3 {
        let m = &self.matrix;
        let w = vee(m);
        let s = w.norm();
        let c = 0.5 * (m.trace() - 1.0);
        let theta = s.atan2(c);
        if theta < SMALL_ANGLE {
            return w * (1.0 + theta * theta / 6.0);
        }
        if std::f64::consts::PI - theta < NEAR_PI {
            // aaᵀ = (sym(R) - cosθ I) / (1 - cosθ); take the best-conditioned column.
            let sym = (m + m.transpose()) * 0.5;
            let b = (sym - Mat3::identity() * c) / (1.0 - c);
            let i = (0..3)
                .max_by(|&i, &j| b[(i, i)].total_cmp(&b[(j, j)]))
                .unwrap_or(0);
            let mut axis: Vec3 = b.column(i).into_owned() / b[(i, i)].max(0.0).sqrt();
            axis.normalize_mut();
            if axis.dot(&w) < 0.0 {
                axis = -axis;
            }
            return axis * theta;
        }
        w * (theta / s)
    }

    /// Rotation angle in `[0, π]`.
    pub fn angle(&self) -> f64 {
        let s = vee(&self.matrix).norm();
        s.atan2(0.5 * (self.matrix.trace() - 1.0))
    }

    /// `2aaᵀ − I`: the half-turn about the unit vector `a`.
    pub fn pi_about(a: &Vec3) -> Result<Self, GeometryError> {
        if a.iter().any(|v| !v.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        let n = a.norm();
        if (n - 1.0).abs() > 1e-9 {
            return Err(GeometryError::NonUnitAxis(n));
        }
        Ok(Self {
            matrix: a * a.transpose() * 2.0 - Mat3::identity(),
        })
    }

    pub fn matrix(&self) -> &Mat3 {
        &self.matrix
    }

    pub fn inverse(&self) -> Self {
        Self {
            matrix: self.matrix.transpose(),
        }
    }

    pub fn apply(&self, v: &Vec3) -> Vec3 {
        self.matrix * v
    }

    /// Nearest rotation matrix in the Frobenius sense.
    pub fn renormalized(&self) -> Self {
        let svd = self.matrix.svd(true, true);
        let (u, v_t) = (svd.u.unwrap(), svd.v_t.unwrap());
        let mut m = u * v_t;
        if m.determinant() < 0.0 {
            let mut u = u;
            u.column_mut(2).neg_mut();
            m = u * v_t;
        }
        Self { matrix: m }
    }
}

impl Mul for Rotation {
    type Output = Rotation;
    fn mul(self, rhs: Rotation) -> Rotation {
        Rotation {
            matrix: self.matrix * rhs.matrix,
        }
    }
}

/// `e_r = ‖log(R)‖`, radians.
pub fn rotation_error(r: &Rotation) -> f64 {
    r.log().norm()
}

/// `e_t = ‖t‖`, meters.
pub fn translation_error(t: &Vec3) -> f64 {
    t.norm()
}

/// Rigid motion `x ↦ R x + t`.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct RigidTransform {
    pub rotation: Rotation,
    pub translation: Vec3,
}

impl RigidTransform {
    pub fn new(rotation: Rotation, translation: Vec3) -> Self {
        Self {
            rotation,
            translation,
        }
    }

    pub fn identity() -> Self {
        Self::new(Rotation::identity(), Vec3::zeros())
    }

    pub fn from_translation(t: Vec3) -> Self {
        Self::new(Rotation::identity(), t)
    }

    pub fn from_rotation(r: Rotation) -> Self {
        Self::new(r, Vec3::zeros())
    }

    pub fn from_quaternion_translation(q: [f64; 4], t: Vec3) -> Result<Self, GeometryError> {
        Ok(Self::new(Rotation::from_quaternion(q)?, t))
    }

    pub fn apply(&self, p: &Vec3) -> Vec3 {
        self.rotation.apply(p) + self.translation
    }

    /// `self ∘ other`: applies `other` first.
    pub fn compose(&self, other: &RigidTransform) -> RigidTransform {
        RigidTransform {
            rotation: self.rotation * other.rotation,
            translation: self.rotation.apply(&other.translation) + self.translation,
        }
    }

    pub fn inverse(&self) -> RigidTransform {
        let r_inv = self.rotation.inverse();
        RigidTransform {
            rotation: r_inv,
            translation: -r_inv.apply(&self.translation),
        }
    }

    /// `(angle between the rotations, distance between the translations)`.
    pub fn difference(&self, other: &RigidTransform) -> (f64, f64) {
        let dr = self.rotation * other.rotation.inverse();
        (
            rotation_error(&dr),
            (self.translation - other.translation).norm(),
        )
    }
}

impl Mul for RigidTransform {
    type Output = RigidTransform;
    fn mul(self, rhs: RigidTransform) -> RigidTransform {
        self.compose(&rhs)
    }
}

/// Flips `d` so that z ≥ 0, breaking ties on y and then x.
fn canonical_sign(d: Vec3) -> Vec3 {
    let flip = if d.z != 0.0 {
        d.z < 0.0
    } else if d.y != 0.0 {
        d.y < 0.0
    } else {
        d.x < 0.0
    };
    if flip {
        -d
    } else {
        d
    }
}

/// An infinite line `anchor + λ·direction` with a canonical unit direction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Line3 {
    anchor: Vec3,
    direction: Vec3,
}

impl Line3 {
    pub fn new(anchor: Vec3, direction: Vec3) -> Result<Self, GeometryError> {
        if anchor.iter().chain(direction.iter()).any(|v| !v.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        let n = direction.norm();
        if n < 1e-15 {
            return Err(GeometryError::ZeroVector);
        }
        Ok(Self {
            anchor,
            direction: canonical_sign(direction / n),
        })
    }

    pub fn anchor(&self) -> &Vec3 {
        &self.anchor
    }

    pub fn direction(&self) -> &Vec3 {
        &self.direction
    }

    pub fn point_at(&self, lambda: f64) -> Vec3 {
        self.anchor + self.direction * lambda
    }

    pub fn transformed(&self, t: &RigidTransform) -> Line3 {
        Line3 {
            anchor: t.apply(&self.anchor),
            direction: canonical_sign(t.rotation.apply(&self.direction)),
        }
    }

    /// Closest point on the line to `p`.
    pub fn project(&self, p: &Vec3) -> Vec3 {
        let d = p - self.anchor;
        self.anchor + self.direction * d.dot(&self.direction)
    }

    /// Angle between the two undirected lines, in `[0, π/2]`.
    pub fn angle_to(&self, other: &Line3) -> f64 {
        let c = self.direction.dot(&other.direction).abs().min(1.0);
        let s = self.direction.cross(&other.direction).norm();
        s.atan2(c)
    }
}

/// Orthogonal distance from `p` to `line`.
pub fn point_to_line_distance(p: &Vec3, line: &Line3) -> f64 {
    let d = p - line.anchor;
    (d - line.direction * d.dot(&line.direction)).norm()
}

/// Feet of the common perpendicular of two lines, or `None` when they are
/// parallel to within `1e-12` in `‖d₁ × d₂‖²`.
pub fn common_perpendicular(a: &Line3, b: &Line3) -> Option<(Vec3, Vec3)> {
    let (d1, d2) = (a.direction, b.direction);
    let w = a.anchor - b.anchor;
    let dd = d1.dot(&d2);
    let denom = 1.0 - dd * dd;
    if denom < 1e-12 {
        return None;
    }
    let (e1, e2) = (d1.dot(&w), d2.dot(&w));
    let s = (dd * e2 - e1) / denom;
    let t = (e2 - dd * e1) / denom;
    Some((a.point_at(s), b.point_at(t)))
}

use crate::geometry::{RigidTransform, Rotation, Vec3};

use super::{PoleSpec, SimError};

/// A singular case of the frame construction that was replaced by a fixed
/// rotation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Degeneracy {
    /// The pole already points along +z; the axis-alignment half-turn is
    /// undefined and identity is used.
    PoleAlongZ,
    /// The sensor lies on −x after alignment; a half-turn about z is used.
    LidarOnNegativeX,
}

/// Result of moving a pole to the origin and the sensor onto the +x axis.
#[derive(Clone, Debug, PartialEq)]
pub struct PoleFrame {
    /// World → pole frame.
    pub world_to_pole: RigidTransform,
    /// Sensor → pole frame; its translation is `[x_p, 0, 0]`.
    pub lidar_to_pole: RigidTransform,
    /// Distance from the pole axis to the sensor.
    pub x_p: f64,
    /// Normal of the sensor's central scan plane, in the pole frame.
    pub scan_normal: Vec3,
    pub degeneracies: Vec<Degeneracy>,
}

/// Builds the pole frame for a sensor with pose `lidar_pose` (sensor → world).
///
/// The chain is: translate by −p; half-turn about `a ∝ [−n_x, −n_y, 1 − n_z]`,
/// which sends the axis to −z; drop the sensor's z offset; half-turn about
/// `b ∝ [v_x + ‖v‖, v_y, v_z]`, which sends the sensor to `[‖v‖, 0, 0]` and
/// flips the axis back to +z.
pub fn canonicalize_pole_frame(
    lidar_pose: &RigidTransform,
    pole: &PoleSpec,
) -> Result<PoleFrame, SimError> {
    pole.validate()?;
    let n = pole.direction;
    let mut degeneracies = Vec::new();

    let a = Vec3::new(-n.x, -n.y, 1.0 - n.z);
    let align = if a.norm() < 1e-12 {
        degeneracies.push(Degeneracy::PoleAlongZ);
        Rotation::identity()
    } else {
        Rotation::pi_about(&a.normalize())?
    };

    let l_star = RigidTransform::from_rotation(align)
        .compose(&RigidTransform::from_translation(-pole.anchor))
        .compose(lidar_pose);
    let v_star = l_star.translation;
    let l = RigidTransform::from_translation(Vec3::new(0.0, 0.0, -v_star.z)).compose(&l_star);
    let v = l.translation;
    let x_p = v.norm();
    if x_p < 1e-12 {
        return Err(SimError::DegenerateGeometry(
            "sensor lies on the pole axis".into(),
        ));
    }

    let b = Vec3::new(v.x + x_p, v.y, v.z);
    let turn = if b.norm() < 1e-12 * x_p {
        degeneracies.push(Degeneracy::LidarOnNegativeX);
        Rotation::from_axis_angle(&Vec3::z(), std::f64::consts::PI)?
    } else {
        Rotation::pi_about(&b.normalize())?
    };

    let lidar_to_pole = RigidTransform::from_rotation(turn).compose(&l);
    let world_to_pole = lidar_to_pole.compose(&lidar_pose.inverse());
    let scan_normal = lidar_to_pole.rotation.apply(&Vec3::z());

    Ok(PoleFrame {
        world_to_pole,
        lidar_to_pole,
        x_p,
        scan_normal,
        degeneracies,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{point_to_line_distance, Mat3};
    use proptest::prelude::*;

    fn pole(anchor: Vec3, direction: Vec3) -> PoleSpec {
        PoleSpec {
            anchor,
            direction: direction.normalize(),
            radius: 0.02,
            z_extent: [-1.0, 1.0],
            reflective: true,
        }
    }

    #[test]
    fn already_canonical_setup() {
        let d = 4.5;
        let pose = RigidTransform::from_translation(Vec3::new(d, 0.0, 0.0));
        let f = canonicalize_pole_frame(&pose, &pole(Vec3::zeros(), Vec3::z())).unwrap();
        assert_eq!(f.degeneracies, vec![Degeneracy::PoleAlongZ]);
        assert!((f.x_p - d).abs() < 1e-12);
        // The final half-turn is about b = e_x, i.e. diag(1, −1, −1).
        let expected = Mat3::from_diagonal(&Vec3::new(1.0, -1.0, -1.0));
        assert!((f.world_to_pole.rotation.matrix() - expected).abs().max() < 1e-12);
        assert!(f.world_to_pole.translation.norm() < 1e-12);
        assert!((f.lidar_to_pole.translation - Vec3::new(d, 0.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn sensor_on_negative_x_uses_half_turn_about_z() {
        let pose = RigidTransform::from_translation(Vec3::new(-3.0, 0.0, 0.0));
        let f = canonicalize_pole_frame(&pose, &pole(Vec3::zeros(), Vec3::z())).unwrap();
        assert!(f.degeneracies.contains(&Degeneracy::LidarOnNegativeX));
        assert!((f.lidar_to_pole.translation - Vec3::new(3.0, 0.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn sensor_on_axis_is_rejected() {
        let pose = RigidTransform::from_translation(Vec3::new(0.0, 0.0, 2.0));
        assert!(matches!(
            canonicalize_pole_frame(&pose, &pole(Vec3::zeros(), Vec3::z())),
            Err(SimError::DegenerateGeometry(_))
        ));
    }

    fn arb_setup() -> impl Strategy<Value = (RigidTransform, PoleSpec)> {
        (
            prop::array::uniform4(-1.0..1.0f64),
            prop::array::uniform3(-5.0..5.0f64),
            prop::array::uniform3(-3.0..3.0f64),
            prop::array::uniform3(-1.0..1.0f64),
        )
            .prop_filter("valid", |(q, _, _, d)| {
                q.iter().map(|v| v * v).sum::<f64>() > 1e-2
                    && d.iter().map(|v| v * v).sum::<f64>() > 1e-2
            })
            .prop_map(|(q, t, p, d)| {
                let pose = RigidTransform::from_quaternion_translation(q, Vec3::from(t)).unwrap();
                (pose, pole(Vec3::from(p), Vec3::from(d)))
            })
            .prop_filter("sensor off axis", |(pose, pole)| {
                point_to_line_distance(&pose.translation, &pole.axis()) > 0.1
            })
    }

    proptest! {
        #[test]
        fn canonical_frame_puts_axis_on_z_and_sensor_on_x((pose, pole) in arb_setup()) {
            let f = canonicalize_pole_frame(&pose, &pole).unwrap();
            for lambda in [-2.0, 0.0, 3.0] {
                let q = f.world_to_pole.apply(&pole.axis().point_at(lambda));
                prop_assert!(q.x.abs() < 1e-9 && q.y.abs() < 1e-9);
            }
            let origin = f.world_to_pole.apply(&pose.translation);
            prop_assert!((origin - Vec3::new(f.x_p, 0.0, 0.0)).norm() < 1e-9);
            prop_assert!((f.lidar_to_pole.translation - origin).norm() < 1e-9);
            prop_assert!((f.x_p - point_to_line_distance(&pose.translation, &pole.axis())).abs() < 1e-9);
        }

        #[test]
        fn alignment_half_turn_sends_axis_to_minus_z((_, pole) in arb_setup()) {
            let n = pole.direction;
            let a = Vec3::new(-n.x, -n.y, 1.0 - n.z);
            prop_assume!(a.norm() > 1e-6);
            let aligned = Rotation::pi_about(&a.normalize()).unwrap().apply(&n);
            prop_assert!((aligned + Vec3::z()).norm() < 1e-9);
        }

        #[test]
        fn round_trip_through_pole_frame((pose, pole) in arb_setup(), p in prop::array::uniform3(-10.0..10.0f64)) {
            let f = canonicalize_pole_frame(&pose, &pole).unwrap();
            let p = Vec3::from(p);
            let back = f.world_to_pole.inverse().apply(&f.world_to_pole.apply(&p));
            prop_assert!((back - p).norm() < 1e-9);
        }
    }
}

//! Scan-plane / cylinder intersection and the independent ray-cast oracle.
//! All functions work in the canonical pole frame: axis = z, sensor at
//! `t = [x_p, 0, 0]`.

use crate::geometry::Vec3;

use super::SimError;

/// Angle residual at which the step solver stops.
const ANGLE_TOL: f64 = 1e-14;
const MAX_POINTS_PER_ARC: usize = 1_000_000;

/// Point at parameter `theta` on the curve where the plane through
/// `[x_p, 0, 0]` with normal `v` cuts the cylinder of radius `r`.
pub fn cylinder_curve_point(theta: f64, x_p: f64, v: &Vec3, r: f64) -> Result<Vec3, SimError> {
    if v.z.abs() < 1e-12 * v.norm().max(1e-300) {
        return Err(SimError::DegenerateGeometry(
            "scan-plane normal is horizontal (v_z = 0)".into(),
        ));
    }
    let (s, c) = theta.sin_cos();
    let z = -(v.x * r * c - x_p * v.x + v.y * r * s) / v.z;
    Ok(Vec3::new(r * c, r * s, z))
}

fn angle_between(a: &Vec3, b: &Vec3) -> f64 {
    a.cross(b).norm().atan2(a.dot(b))
}

/// Root of `g` in `[lo, hi]` given `g(lo) < 0 ≤ g(hi)`: bisection until the
/// bracket is small, then secant steps that fall back to bisection whenever
/// they leave the bracket.
fn bracketed_root(g: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let (mut g_lo, mut g_hi) = (g(lo), g(hi));
    let width0 = hi - lo;
    for _ in 0..8 {
        let mid = 0.5 * (lo + hi);
        let gm = g(mid);
        if gm < 0.0 {
            lo = mid;
            g_lo = gm;
        } else {
            hi = mid;
            g_hi = gm;
        }
    }
    for _ in 0..200 {
        if g_hi.abs() <= tol {
            return hi;
        }
        if (-g_lo) <= tol {
            return lo;
        }
        let mut x = hi - g_hi * (hi - lo) / (g_hi - g_lo);
        if !(x > lo && x < hi) {
            x = 0.5 * (lo + hi);
        }
        let gx = g(x);
        if gx.abs() <= tol {
            return x;
        }
        if gx < 0.0 {
            // Pull the stale end in so the secant cannot stall on one side.
            let mid = 0.5 * (x + hi);
            let gm = g(mid);
            if gm < 0.0 {
                lo = mid;
                g_lo = gm;
            } else {
                lo = x;
                g_lo = gx;
                hi = mid;
                g_hi = gm;
            }
        } else {
            let mid = 0.5 * (lo + x);
            let gm = g(mid);
            if gm < 0.0 {
                lo = mid;
                g_lo = gm;
                hi = x;
                g_hi = gx;
            } else {
                hi = mid;
                g_hi = gm;
            }
        }
        if hi - lo <= f64::EPSILON * width0 {
            break;
        }
    }
    if g_hi.abs() < (-g_lo) {
        hi
    } else {
        lo
    }
}

/// Returns along one scan plane, starting at the visibility boundary
/// `θ = −arccos(r / x_p)` and stepping `θ` so that consecutive returns
/// subtend exactly `c` radians at the sensor.
pub fn march_beam_points(x_p: f64, v: &Vec3, r: f64, c: f64) -> Result<Vec<Vec3>, SimError> {
    if !(r < x_p) {
        return Err(SimError::NoVisibleArc { radius: r, x_p });
    }
    if !(c > 0.0) {
        return Err(SimError::InvalidModel(format!(
            "angular resolution must be positive, got {c}"
        )));
    }
    let t = Vec3::new(x_p, 0.0, 0.0);
    let theta_max = (r / x_p).acos();
    let f = |theta: f64| cylinder_curve_point(theta, x_p, v, r);

    let mut theta = -theta_max;
    let mut current = f(theta)?;
    let mut out = vec![current];
    let initial_bracket = 4.0 * c * x_p / r;

    while out.len() < MAX_POINTS_PER_ARC {
        let remaining = theta_max - theta;
        if remaining <= 0.0 {
            break;
        }
        let ray = current - t;
        let g = |d: f64| {
            let p = cylinder_curve_point(theta + d, x_p, v, r).expect("checked normal");
            angle_between(&ray, &(p - t)) - c
        };
        let mut hi = initial_bracket.min(remaining);
        if g(hi) < 0.0 {
            if hi < remaining && g(remaining) >= 0.0 {
                hi = remaining;
            } else {
                break;
            }
        }
        let step = bracketed_root(g, 0.0, hi, ANGLE_TOL);
        theta += step;
        current = f(theta)?;
        out.push(current);
    }
    Ok(out)
}

/// Nearest intersection at positive range of the ray `origin + s·dir` with
/// the infinite cylinder `x² + y² = r²`.
pub fn raycast_cylinder(origin: &Vec3, dir: &Vec3, r: f64) -> Option<Vec3> {
    let a = dir.x * dir.x + dir.y * dir.y;
    if a < 1e-300 {
        return None;
    }
    let b = 2.0 * (origin.x * dir.x + origin.y * dir.y);
    let c = origin.x * origin.x + origin.y * origin.y - r * r;
    let mut disc = b * b - 4.0 * a * c;
    // Grazing rays lose the discriminant to cancellation; snap to tangency.
    if disc.abs() <= 1e-12 * b * b {
        disc = 0.0;
    }
    if disc < 0.0 {
        return None;
    }
    let sq = disc.sqrt();
    // Numerically stable pair of roots.
    let q = -0.5 * (b + b.signum() * sq);
    let (s1, s2) = if q == 0.0 {
        (0.0, 0.0)
    } else {
        let (x, y) = (q / a, c / q);
        (x.min(y), x.max(y))
    };
    let s = if s1 > 0.0 {
        s1
    } else if s2 > 0.0 {
        s2
    } else {
        return None;
    };
    Some(origin + dir * s)
}

/// Normal of the plane through the sensor that is tangent to the elevation-`e`
/// cone along azimuth `bearing`: `e_z` tilted by `e` about the horizontal axis
/// perpendicular to the bearing. Sensor frame.
pub fn tilted_scan_normal(elevation: f64, bearing: f64) -> Vec3 {
    let (se, ce) = elevation.sin_cos();
    let (sb, cb) = bearing.sin_cos();
    Vec3::new(-se * cb, -se * sb, ce)
}

/// Direction of the ray at `elevation` and `azimuth` on a spinning sensor.
pub fn cone_ray(elevation: f64, azimuth: f64) -> Vec3 {
    let (se, ce) = elevation.sin_cos();
    let (sa, ca) = azimuth.sin_cos();
    Vec3::new(ce * ca, ce * sa, se)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Rotation;
    use proptest::prelude::*;

    #[test]
    fn curve_point_on_horizontal_plane() {
        let p = cylinder_curve_point(0.0, 5.0, &Vec3::z(), 0.5).unwrap();
        assert_eq!(p, Vec3::new(0.5, 0.0, 0.0));
        assert!(cylinder_curve_point(0.0, 5.0, &Vec3::x(), 0.5).is_err());
    }

    #[test]
    fn head_on_and_grazing_rays() {
        let o = Vec3::new(5.0, 0.0, 0.0);
        let hit = raycast_cylinder(&o, &Vec3::new(-1.0, 0.0, 0.0), 0.5).unwrap();
        assert!((hit - Vec3::new(0.5, 0.0, 0.0)).norm() < 1e-15);
        let graze = raycast_cylinder(&Vec3::new(5.0, 0.5, 0.0), &Vec3::new(-1.0, 0.0, 0.0), 0.5)
            .unwrap();
        assert!((graze.x.hypot(graze.y) - 0.5).abs() < 1e-9);
        assert!(raycast_cylinder(&o, &Vec3::new(1.0, 0.0, 0.0), 0.5).is_none());
        assert!(raycast_cylinder(&Vec3::new(5.0, 0.6, 0.0), &Vec3::new(-1.0, 0.0, 0.0), 0.5).is_none());
        assert!(raycast_cylinder(&o, &Vec3::z(), 0.5).is_none());
    }

    #[test]
    fn march_rejects_sensor_inside_cylinder() {
        assert!(matches!(
            march_beam_points(0.3, &Vec3::z(), 0.5, 0.01),
            Err(SimError::NoVisibleArc { .. })
        ));
    }

    #[test]
    fn tilted_normal_is_perpendicular_to_cone_ray_at_bearing() {
        for (e, b) in [(0.1, 0.3), (-0.26, 2.0), (0.2, -1.4)] {
            let n = tilted_scan_normal(e, b);
            assert!(n.dot(&cone_ray(e, b)).abs() < 1e-15);
            assert!((n.norm() - 1.0).abs() < 1e-15);
        }
    }

    fn arb_plane() -> impl Strategy<Value = (f64, Vec3, f64)> {
        (2.0..12.0f64, 0.01..0.4f64, -0.5..0.5f64, -0.5..0.5f64)
            .prop_map(|(x_p, r, tx, ty)| {
                let v = Rotation::exp(&Vec3::new(tx, ty, 0.0)).apply(&Vec3::z());
                (x_p, v, r)
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn curve_point_lies_on_plane_and_cylinder((x_p, v, r) in arb_plane(), theta in -3.0..3.0f64) {
            let p = cylinder_curve_point(theta, x_p, &v, r).unwrap();
            let t = Vec3::new(x_p, 0.0, 0.0);
            prop_assert!(v.dot(&(p - t)).abs() < 1e-12);
            prop_assert!((p.x * p.x + p.y * p.y - r * r).abs() < 1e-15);
        }

        #[test]
        fn consecutive_returns_subtend_resolution((x_p, v, r) in arb_plane(), c_deg in 0.1..0.5f64) {
            let c = c_deg.to_radians();
            let pts = march_beam_points(x_p, &v, r, c).unwrap();
            let t = Vec3::new(x_p, 0.0, 0.0);
            prop_assert!(!pts.is_empty());
            for w in pts.windows(2) {
                prop_assert!((angle_between(&(w[0] - t), &(w[1] - t)) - c).abs() < 1e-9);
            }
            for p in &pts {
                prop_assert!((p.x.hypot(p.y) - r).abs() < 1e-12);
                // Every return faces the sensor.
                prop_assert!(p.x * x_p - r * r >= -1e-12);
            }
        }

        #[test]
        fn random_hits_satisfy_cylinder_equation(
            oy in -0.3..0.3f64, oz in -1.0..1.0f64, dx in -1.0..-0.2f64, dy in -0.1..0.1f64, dz in -0.3..0.3f64,
        ) {
            let o = Vec3::new(6.0, oy, oz);
            let d = Vec3::new(dx, dy, dz).normalize();
            if let Some(p) = raycast_cylinder(&o, &d, 0.4) {
                prop_assert!((p.x * p.x + p.y * p.y - 0.16).abs() < 1e-10);
                prop_assert!((p - o).dot(&d) > 0.0);
            }
        }
    }
}

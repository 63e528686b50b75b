//! Evaluation measures: axis-fit error of a fitted pole line, range-averaged
//! extrinsic error, and a Rényi-quadratic-entropy crispness score.

use rayon::prelude::*;
use thiserror::Error;

use crate::cloud::PointCloud;
use crate::geometry::{Line3, RigidTransform, Vec3};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("line is horizontal (n_cz = 0); the z-range integral is undefined")]
    HorizontalLine,
    #[error("empty z range [{z_min}, {z_max}]")]
    EmptyRange { z_min: f64, z_max: f64 },
    #[error("need at least 2 points, got {0}")]
    TooFewPoints(usize),
    #[error("invalid metric parameter: {0}")]
    InvalidParameter(String),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Integrand {
    /// `(x_c + n_cx·λ)² + (y_c + n_cy·λ)²`, squared distance to the z-axis.
    #[default]
    Sum,
    /// `(x_c + n_cx·λ)²·(y_c + n_cy·λ)²`, the product form.
    Product,
}

impl std::str::FromStr for Integrand {
    type Err = MetricsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sum" => Ok(Integrand::Sum),
            "product" => Ok(Integrand::Product),
            other => Err(MetricsError::InvalidParameter(format!(
                "unknown integrand {other:?}, expected sum or product"
            ))),
        }
    }
}

impl std::fmt::Display for Integrand {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Integrand::Sum => "sum",
            Integrand::Product => "product",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AxisFitConfig {
    pub integrand: Integrand,
    pub z_min: f64,
    pub z_max: f64,
}

impl AxisFitConfig {
    /// Range spanned by the z-coordinates of `points`.
    pub fn spanning(points: &[Vec3], integrand: Integrand) -> Self {
        let (z_min, z_max) = points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
            (lo.min(p.z), hi.max(p.z))
        });
        Self {
            integrand,
            z_min,
            z_max,
        }
    }
}

// Polynomials as coefficient vectors, lowest degree first.
fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn poly_add(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len().max(b.len())];
    for (i, x) in a.iter().enumerate() {
        out[i] += x;
    }
    for (i, x) in b.iter().enumerate() {
        out[i] += x;
    }
    out
}

fn poly_integral(p: &[f64], lo: f64, hi: f64) -> f64 {
    let antiderivative = |x: f64| {
        p.iter()
            .enumerate()
            .rev()
            .fold(0.0, |acc, (k, c)| acc * x + c / (k + 1) as f64)
            * x
    };
    antiderivative(hi) - antiderivative(lo)
}

/// Mean over the line parameter `λ ∈ [(z_min − z_c)/n_cz, (z_max − z_c)/n_cz]`
/// of the chosen integrand, integrated in closed form.
pub fn axis_fit_error(line: &Line3, cfg: &AxisFitConfig) -> Result<f64, MetricsError> {
    if !(cfg.z_min < cfg.z_max) {
        return Err(MetricsError::EmptyRange {
            z_min: cfg.z_min,
            z_max: cfg.z_max,
        });
    }
    let (c, n) = (line.anchor(), line.direction());
    if n.z.abs() < 1e-12 {
        return Err(MetricsError::HorizontalLine);
    }
    let lo = (cfg.z_min - c.z) / n.z;
    let hi = (cfg.z_max - c.z) / n.z;
    let u = [c.x, n.x];
    let v = [c.y, n.y];
    let (uu, vv) = (poly_mul(&u, &u), poly_mul(&v, &v));
    let integrand = match cfg.integrand {
        Integrand::Sum => poly_add(&uu, &vv),
        Integrand::Product => poly_mul(&uu, &vv),
    };
    Ok(poly_integral(&integrand, lo, hi) / (hi - lo))
}

fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &impl Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    recurse(f, a, b, fa, fm, fb, simpson(fa, fm, fb, a, b), tol, 50)
}

/// Nearest and farthest range used by [`extrinsic_error_e_rt`] by default.
pub const E_RT_RANGE: (f64, f64) = (1.0, 60.0);

/// Mean displacement between the two transforms along `[0, x, 0]`,
/// `x ∈ [near, far]`.
pub fn extrinsic_error_e_rt_over(
    result: &RigidTransform,
    truth: &RigidTransform,
    near: f64,
    far: f64,
) -> Result<f64, MetricsError> {
    if !(near < far) {
        return Err(MetricsError::InvalidParameter(format!(
            "e_rt range must satisfy near < far, got [{near}, {far}]"
        )));
    }
    let a = (result.rotation.matrix() - truth.rotation.matrix()) * Vec3::y();
    let b = result.translation - truth.translation;
    let f = |x: f64| (a * x + b).norm();
    Ok(adaptive_simpson(&f, near, far, 1e-9) / (far - near))
}

pub fn extrinsic_error_e_rt(result: &RigidTransform, truth: &RigidTransform) -> f64 {
    extrinsic_error_e_rt_over(result, truth, E_RT_RANGE.0, E_RT_RANGE.1)
        .expect("constant range is valid")
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RqeConfig {
    pub kernel_sigma: f64,
    pub subsample_size: usize,
}

impl Default for RqeConfig {
    fn default() -> Self {
        Self {
            kernel_sigma: 0.05,
            subsample_size: 5000,
        }
    }
}

/// `ln V` with the information potential
/// `V = (1/N²) Σᵢ Σⱼ exp(−‖pᵢ − pⱼ‖² / (4σ²))`. This is the negated Rényi
/// quadratic entropy, so a crisper cloud scores higher.
pub fn rqe_score(cloud: &PointCloud, cfg: &RqeConfig) -> Result<f64, MetricsError> {
    if !(cfg.kernel_sigma > 0.0) || cfg.subsample_size < 2 {
        return Err(MetricsError::InvalidParameter(format!("{cfg:?}")));
    }
    if cloud.len() < 2 {
        return Err(MetricsError::TooFewPoints(cloud.len()));
    }
    let sub = cloud.stride_subsample(cfg.subsample_size);
    let pts = sub.points();
    let inv = 1.0 / (4.0 * cfg.kernel_sigma * cfg.kernel_sigma);
    // Row sums in parallel, reduced in a fixed order.
    let rows: Vec<f64> = pts
        .par_iter()
        .map(|p| pts.iter().map(|q| (-(p - q).norm_squared() * inv).exp()).sum())
        .collect();
    let n = pts.len() as f64;
    Ok((rows.iter().sum::<f64>() / (n * n)).ln())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Rotation;
    use crate::sim::stream_rng;
    use proptest::prelude::*;
    use rand::Rng;

    fn line(c: [f64; 3], n: [f64; 3]) -> Line3 {
        Line3::new(Vec3::from(c), Vec3::from(n)).unwrap()
    }

    fn cfg(mode: Integrand) -> AxisFitConfig {
        AxisFitConfig {
            integrand: mode,
            z_min: -1.5,
            z_max: 2.0,
        }
    }

    /// Midpoint rule over the line parameter, independent of the closed form.
    fn brute_force(l: &Line3, c: &AxisFitConfig) -> f64 {
        let (a, n) = (l.anchor(), l.direction());
        let (lo, hi) = ((c.z_min - a.z) / n.z, (c.z_max - a.z) / n.z);
        let steps = 200_000;
        let h = (hi - lo) / steps as f64;
        (0..steps)
            .map(|i| {
                let lam = lo + (i as f64 + 0.5) * h;
                let (x, y) = (a.x + n.x * lam, a.y + n.y * lam);
                match c.integrand {
                    Integrand::Sum => x * x + y * y,
                    Integrand::Product => x * x * y * y,
                }
            })
            .sum::<f64>()
            * h
            / (hi - lo)
    }

    #[test]
    fn z_axis_scores_zero() {
        for m in [Integrand::Sum, Integrand::Product] {
            assert_eq!(axis_fit_error(&line([0.0; 3], [0.0, 0.0, 1.0]), &cfg(m)).unwrap(), 0.0);
        }
    }

    #[test]
    fn constant_offset_sum_is_exact() {
        let e = axis_fit_error(&line([0.3, -0.4, 7.0], [0.0, 0.0, 1.0]), &cfg(Integrand::Sum)).unwrap();
        assert!((e - 0.25).abs() < 1e-15);
        let p = axis_fit_error(&line([0.3, -0.4, 7.0], [0.0, 0.0, 1.0]), &cfg(Integrand::Product)).unwrap();
        assert!((p - 0.09 * 0.16).abs() < 1e-15);
    }

    #[test]
    fn axis_fit_error_rejections() {
        assert_eq!(
            axis_fit_error(&line([0.0; 3], [1.0, 0.0, 0.0]), &cfg(Integrand::Sum)),
            Err(MetricsError::HorizontalLine)
        );
        let bad = AxisFitConfig { z_min: 1.0, z_max: 1.0, integrand: Integrand::Sum };
        assert!(axis_fit_error(&line([0.0; 3], [0.0, 0.0, 1.0]), &bad).is_err());
        assert!("cube".parse::<Integrand>().is_err());
        assert_eq!("product".parse::<Integrand>().unwrap(), Integrand::Product);
    }

    #[test]
    fn e_rt_examples() {
        let t = RigidTransform::new(Rotation::exp(&Vec3::new(0.2, -0.1, 0.3)), Vec3::new(1.0, 2.0, 3.0));
        assert_eq!(extrinsic_error_e_rt(&t, &t), 0.0);
        let d = Vec3::new(0.3, -0.2, 0.6);
        let shifted = RigidTransform::new(t.rotation, t.translation + d);
        for (n, m) in [(1.0, 60.0), (0.0, 3.0), (-5.0, 2.0)] {
            let e = extrinsic_error_e_rt_over(&shifted, &t, n, m).unwrap();
            assert!((e - d.norm()).abs() < 1e-12);
        }
        assert!(extrinsic_error_e_rt_over(&t, &t, 2.0, 1.0).is_err());
    }

    #[test]
    fn rqe_examples() {
        let mut rng = stream_rng(1, &[5]);
        let pts: Vec<Vec3> = (0..400)
            .map(|_| Vec3::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0), rng.random_range(-0.5..0.5)))
            .collect();
        let a = PointCloud::from_points(pts.clone(), 1.0).unwrap();
        let overlaid = a.merged(&a);
        let offset = a.merged(&a.transformed(&RigidTransform::from_translation(Vec3::new(0.5, 0.0, 0.0))));
        let cfg = RqeConfig::default();
        assert!(rqe_score(&overlaid, &cfg).unwrap() > rqe_score(&offset, &cfg).unwrap());
        let m = RigidTransform::new(Rotation::exp(&Vec3::new(0.4, 1.0, -0.3)), Vec3::new(5.0, -3.0, 1.0));
        let moved = offset.transformed(&m);
        assert!((rqe_score(&offset, &cfg).unwrap() - rqe_score(&moved, &cfg).unwrap()).abs() < 1e-9);
        let one = PointCloud::from_points(vec![Vec3::zeros()], 1.0).unwrap();
        assert_eq!(rqe_score(&one, &cfg), Err(MetricsError::TooFewPoints(1)));
    }

    #[test]
    fn rqe_is_thread_count_independent() {
        let mut rng = stream_rng(2, &[5]);
        let pts: Vec<Vec3> = (0..1000)
            .map(|_| Vec3::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0), 0.0))
            .collect();
        let c = PointCloud::from_points(pts, 1.0).unwrap();
        let pool = |n| rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap();
        let a = pool(1).install(|| rqe_score(&c, &RqeConfig::default()).unwrap());
        let b = pool(3).install(|| rqe_score(&c, &RqeConfig::default()).unwrap());
        assert_eq!(a, b);
    }

    fn arb_line() -> impl Strategy<Value = Line3> {
        (prop::array::uniform3(-1.0..1.0f64), prop::array::uniform2(-0.4..0.4f64))
            .prop_map(|(c, n)| line(c, [n[0], n[1], 1.0]))
    }

    fn arb_transform() -> impl Strategy<Value = RigidTransform> {
        (prop::array::uniform3(-1.0..1.0f64), prop::array::uniform3(-2.0..2.0f64))
            .prop_map(|(w, t)| RigidTransform::new(Rotation::exp(&Vec3::from(w)), Vec3::from(t)))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn axis_fit_matches_brute_force(l in arb_line()) {
            for m in [Integrand::Sum, Integrand::Product] {
                let c = cfg(m);
                let exact = axis_fit_error(&l, &c).unwrap();
                let approx = brute_force(&l, &c);
                prop_assert!((exact - approx).abs() <= 1e-8 * (1.0 + exact.abs()), "{m}: {exact} vs {approx}");
            }
        }

        #[test]
        fn sum_mode_invariant_under_rotation_about_z(l in arb_line(), angle in -3.0..3.0f64) {
            let rz = RigidTransform::from_rotation(Rotation::exp(&(Vec3::z() * angle)));
            let c = cfg(Integrand::Sum);
            let a = axis_fit_error(&l, &c).unwrap();
            let b = axis_fit_error(&l.transformed(&rz), &c).unwrap();
            prop_assert!((a - b).abs() < 1e-9);
        }

        #[test]
        fn e_rt_matches_dense_trapezoid(a in arb_transform(), b in arb_transform()) {
            let e = extrinsic_error_e_rt(&a, &b);
            let n = 1_000_000;
            let h = 59.0 / n as f64;
            let f = |x: f64| {
                let p = Vec3::new(0.0, x, 0.0);
                (a.apply(&p) - b.apply(&p)).norm()
            };
            let trap = (0..n).map(|i| {
                let x = 1.0 + i as f64 * h;
                0.5 * (f(x) + f(x + h))
            }).sum::<f64>() * h / 59.0;
            prop_assert!((e - trap).abs() < 1e-7, "{} vs {}", e, trap);
            prop_assert!((e - extrinsic_error_e_rt(&b, &a)).abs() < 1e-12);
        }
    }
}

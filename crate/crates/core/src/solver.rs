//! Relative pose from two matched pole pairs.
//!
//! The solver maps LiDAR-2 ("source") points onto LiDAR-1 ("target") lines,
//! so a result is the LiDAR-2 → LiDAR-1 transform. Each of the eight
//! correspondence hypotheses gets a closed-form start and a
//! Levenberg–Marquardt refinement of the point-to-line cost.

use std::fmt;

use nalgebra::{Matrix3x6, Matrix6, Vector6};
use rayon::prelude::*;
use thiserror::Error;

use crate::extract::FittedPole;
use crate::geometry::{common_perpendicular, hat, Line3, Mat3, RigidTransform, Rotation, Vec3};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("lines of the {side} pair are parallel")]
    ParallelLines { side: &'static str },
    #[error("pole {pole} of the source has no points")]
    EmptyPole { pole: usize },
    #[error("invalid solver parameter: {0}")]
    InvalidParameter(String),
    #[error("normal equations are singular")]
    Singular,
}

/// Which target pole each source pole is matched with.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pairing {
    /// Source 0 ↔ target 0, source 1 ↔ target 1.
    Direct,
    /// Source 0 ↔ target 1, source 1 ↔ target 0.
    Swapped,
}

/// A pairing plus, for each source pole, whether its fitted direction is kept
/// (+1) or reversed (−1) before matching.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Hypothesis {
    pub pairing: Pairing,
    pub signs: [i8; 2],
}

impl Hypothesis {
    /// Target pole matched with source pole `k`.
    pub fn target_of(&self, k: usize) -> usize {
        match self.pairing {
            Pairing::Direct => k,
            Pairing::Swapped => 1 - k,
        }
    }

    /// Position in [`enumerate_hypotheses`] order.
    pub fn index(&self) -> usize {
        let p = match self.pairing {
            Pairing::Direct => 0,
            Pairing::Swapped => 4,
        };
        let s = |v: i8| usize::from(v < 0);
        p + 2 * s(self.signs[0]) + s(self.signs[1])
    }

    /// The same matching seen from the target side.
    pub fn reversed(&self) -> Hypothesis {
        Hypothesis {
            pairing: self.pairing,
            signs: [self.signs[self.target_of(0)], self.signs[self.target_of(1)]],
        }
    }

    /// Hypothesis with both direction signs reversed.
    pub fn flipped(&self) -> Hypothesis {
        Hypothesis {
            pairing: self.pairing,
            signs: [-self.signs[0], -self.signs[1]],
        }
    }
}

impl fmt::Display for Hypothesis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = |s: i8| if s > 0 { '+' } else { '-' };
        write!(
            f,
            "{}{}{}",
            match self.pairing {
                Pairing::Direct => "direct",
                Pairing::Swapped => "swapped",
            },
            sign(self.signs[0]),
            sign(self.signs[1])
        )
    }
}

/// All eight hypotheses: direct pairing first, signs in the order
/// (+,+), (+,−), (−,+), (−,−).
pub fn enumerate_hypotheses() -> Vec<Hypothesis> {
    let mut out = Vec::with_capacity(8);
    for pairing in [Pairing::Direct, Pairing::Swapped] {
        for s0 in [1, -1] {
            for s1 in [1, -1] {
                out.push(Hypothesis {
                    pairing,
                    signs: [s0, s1],
                });
            }
        }
    }
    out
}

/// The hypothesis that agrees with a known source → target transform.
pub fn hypothesis_for_transform(
    transform: &RigidTransform,
    target: &[Line3; 2],
    source: &[Line3; 2],
) -> Hypothesis {
    let mapped = (*source).map(|l| transform.rotation.apply(l.direction()));
    let fit = |pairing: Pairing| {
        let h = Hypothesis {
            pairing,
            signs: [1, 1],
        };
        (0..2)
            .map(|k| mapped[k].dot(target[h.target_of(k)].direction()).abs())
            .sum::<f64>()
    };
    let pairing = if fit(Pairing::Direct) >= fit(Pairing::Swapped) {
        Pairing::Direct
    } else {
        Pairing::Swapped
    };
    let h = Hypothesis {
        pairing,
        signs: [1, 1],
    };
    let sign = |k: usize| {
        if mapped[k].dot(target[h.target_of(k)].direction()) >= 0.0 {
            1
        } else {
            -1
        }
    };
    Hypothesis {
        pairing,
        signs: [sign(0), sign(1)],
    }
}

fn frame(d1: &Vec3, d2: &Vec3) -> Mat3 {
    let e2 = (d2 - d1 * d2.dot(d1)).normalize();
    Mat3::from_columns(&[*d1, e2, d1.cross(&e2)])
}

/// Rotation aligning the signed source directions with the matched target
/// directions; translation carrying the midpoint of the source lines' common
/// perpendicular onto the target one.
pub fn closed_form_init(
    h: &Hypothesis,
    target: &[Line3; 2],
    source: &[Line3; 2],
) -> Result<RigidTransform, SolverError> {
    let ds = [0, 1].map(|k| source[k].direction() * f64::from(h.signs[k]));
    let dt = [0, 1].map(|k| *target[h.target_of(k)].direction());
    let (ps, pt) = match (
        common_perpendicular(&source[0], &source[1]),
        common_perpendicular(&target[h.target_of(0)], &target[h.target_of(1)]),
    ) {
        (None, _) => return Err(SolverError::ParallelLines { side: "source" }),
        (_, None) => return Err(SolverError::ParallelLines { side: "target" }),
        (Some(s), Some(t)) => (s, t),
    };
    let r = frame(&dt[0], &dt[1]) * frame(&ds[0], &ds[1]).transpose();
    let rotation = Rotation::nearest_to(&r);
    let ms = 0.5 * (ps.0 + ps.1);
    let mt = 0.5 * (pt.0 + pt.1);
    Ok(RigidTransform::new(rotation, mt - rotation.apply(&ms)))
}

/// `(I − ddᵀ)(T·p − a)` for the line through `a` with direction `d`.
pub fn residual(t: &RigidTransform, p: &Vec3, line: &Line3) -> Vec3 {
    let d = line.direction();
    let w = t.apply(p) - line.anchor();
    w - d * d.dot(&w)
}

/// Jacobian of [`residual`] with respect to `(δω, δt)` for the update
/// `R ← exp(δω)·R`, `t ← t + δt`.
pub fn residual_jacobian(t: &RigidTransform, p: &Vec3, line: &Line3) -> Matrix3x6<f64> {
    let d = line.direction();
    let proj = Mat3::identity() - d * d.transpose();
    let rp = t.rotation.apply(p);
    let mut j = Matrix3x6::zeros();
    j.fixed_view_mut::<3, 3>(0, 0).copy_from(&(-proj * hat(&rp)));
    j.fixed_view_mut::<3, 3>(0, 3).copy_from(&proj);
    j
}

/// Applies the local update used by [`residual_jacobian`].
pub fn perturb(t: &RigidTransform, delta: &Vector6<f64>) -> RigidTransform {
    let w = Vec3::new(delta[0], delta[1], delta[2]);
    let dt = Vec3::new(delta[3], delta[4], delta[5]);
    RigidTransform::new(
        (Rotation::exp(&w) * t.rotation).renormalized(),
        t.translation + dt,
    )
}

/// Relative cost difference treated as a tie when accepting a step.
pub const COST_TIE: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct SolverParams {
    pub max_iterations: usize,
    pub step_tolerance: f64,
    pub gradient_tolerance: f64,
    pub initial_lambda: f64,
    /// Switches the squared loss to Huber with this threshold (meters).
    pub huber_delta: Option<f64>,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self {
            max_iterations: 100,
            step_tolerance: 1e-10,
            gradient_tolerance: 1e-10,
            initial_lambda: 1e-3,
            huber_delta: None,
        }
    }
}

impl SolverParams {
    pub fn validate(&self) -> Result<(), SolverError> {
        let ok = self.max_iterations > 0
            && self.step_tolerance > 0.0
            && self.gradient_tolerance > 0.0
            && self.initial_lambda > 0.0
            && self.huber_delta.is_none_or(|d| d > 0.0);
        if ok {
            Ok(())
        } else {
            Err(SolverError::InvalidParameter(format!("{self:?}")))
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CandidateResult {
    pub hypothesis: Hypothesis,
    pub init: RigidTransform,
    pub transform: RigidTransform,
    /// Sum of squared point-to-line distances, m².
    pub final_cost: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Objective after the start and after every accepted step. Non-increasing
    /// up to the relative rounding allowance [`COST_TIE`].
    pub cost_trace: Vec<f64>,
}

/// Sum of squared point-to-line distances of the source points under `t`.
pub fn point_to_line_cost(
    t: &RigidTransform,
    source_points: [&[Vec3]; 2],
    target: &[Line3; 2],
    h: &Hypothesis,
) -> f64 {
    (0..2)
        .map(|k| {
            let line = &target[h.target_of(k)];
            source_points[k]
                .iter()
                .map(|p| residual(t, p, line).norm_squared())
                .sum::<f64>()
        })
        .sum()
}

fn loss(sq: f64, huber: Option<f64>) -> f64 {
    match huber {
        None => sq,
        Some(d) => {
            let r = sq.sqrt();
            if r <= d {
                sq
            } else {
                2.0 * d * r - d * d
            }
        }
    }
}

fn objective(
    t: &RigidTransform,
    source_points: [&[Vec3]; 2],
    target: &[Line3; 2],
    h: &Hypothesis,
    huber: Option<f64>,
) -> f64 {
    (0..2)
        .map(|k| {
            let line = &target[h.target_of(k)];
            source_points[k]
                .iter()
                .map(|p| loss(residual(t, p, line).norm_squared(), huber))
                .sum::<f64>()
        })
        .sum()
}

fn normal_equations(
    t: &RigidTransform,
    source_points: [&[Vec3]; 2],
    target: &[Line3; 2],
    h: &Hypothesis,
    huber: Option<f64>,
) -> (Matrix6<f64>, Vector6<f64>) {
    let mut hess = Matrix6::<f64>::zeros();
    let mut grad = Vector6::<f64>::zeros();
    for k in 0..2 {
        let line = &target[h.target_of(k)];
        for p in source_points[k] {
            let e = residual(t, p, line);
            let j = residual_jacobian(t, p, line);
            let w = match huber {
                Some(d) if e.norm() > d => d / e.norm(),
                _ => 1.0,
            };
            hess += w * j.transpose() * j;
            grad += w * j.transpose() * e;
        }
    }
    (hess, grad)
}

/// Levenberg–Marquardt on the point-to-line objective starting at `init`.
pub fn refine(
    init: &RigidTransform,
    source_points: [&[Vec3]; 2],
    target: &[Line3; 2],
    h: &Hypothesis,
    params: &SolverParams,
) -> Result<CandidateResult, SolverError> {
    params.validate()?;
    for (pole, pts) in source_points.iter().enumerate() {
        if pts.is_empty() {
            return Err(SolverError::EmptyPole { pole });
        }
    }
    let huber = params.huber_delta;
    let mut t = *init;
    let mut cost = objective(&t, source_points, target, h, huber);
    let mut trace = vec![cost];
    let mut lambda = params.initial_lambda;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < params.max_iterations {
        iterations += 1;
        let (hess, grad) = normal_equations(&t, source_points, target, h, huber);
        if grad.norm() < params.gradient_tolerance {
            converged = true;
            break;
        }
        let mut damped = hess;
        for i in 0..6 {
            damped[(i, i)] += lambda * hess[(i, i)].max(1e-12);
        }
        let step = match damped.cholesky() {
            Some(c) => -c.solve(&grad),
            None => damped.lu().solve(&-grad).ok_or(SolverError::Singular)?,
        };
        if step.norm() < params.step_tolerance {
            converged = true;
            break;
        }
        let candidate = perturb(&t, &step);
        let new_cost = objective(&candidate, source_points, target, h, huber);
        // Close to a minimum with non-zero cost the objective stops resolving
        // the step, so a tie within rounding is settled by the gradient.
        let accept = new_cost < cost
            || (new_cost <= cost * (1.0 + COST_TIE)
                && normal_equations(&candidate, source_points, target, h, huber)
                    .1
                    .norm()
                    < grad.norm());
        if accept {
            t = candidate;
            cost = new_cost;
            trace.push(cost);
            lambda = (lambda / 10.0).max(1e-12);
        } else {
            lambda = (lambda * 10.0).min(1e32);
        }
    }

    Ok(CandidateResult {
        hypothesis: *h,
        init: *init,
        transform: t,
        final_cost: point_to_line_cost(&t, source_points, target, h),
        converged,
        iterations,
        cost_trace: trace,
    })
}

fn lines_of(poles: &[FittedPole; 2]) -> [Line3; 2] {
    [poles[0].line, poles[1].line]
}

/// Initializes and refines one hypothesis.
pub fn solve_hypothesis(
    h: &Hypothesis,
    target: &[FittedPole; 2],
    source: &[FittedPole; 2],
    params: &SolverParams,
) -> Result<CandidateResult, SolverError> {
    let (tl, sl) = (lines_of(target), lines_of(source));
    let init = closed_form_init(h, &tl, &sl)?;
    refine(
        &init,
        [&source[0].points, &source[1].points],
        &tl,
        h,
        params,
    )
}

/// One result per hypothesis, in [`enumerate_hypotheses`] order.
pub fn solve_all(
    target: &[FittedPole; 2],
    source: &[FittedPole; 2],
    params: &SolverParams,
) -> Vec<Result<CandidateResult, SolverError>> {
    enumerate_hypotheses()
        .par_iter()
        .map(|h| solve_hypothesis(h, target, source, params))
        .collect()
}

/// Solves the reverse problem (target points onto source lines) for the same
/// matching and returns the rotation angle and translation distance between
/// its inverse and `candidate.transform`.
pub fn reverse_consistency(
    candidate: &CandidateResult,
    target: &[FittedPole; 2],
    source: &[FittedPole; 2],
    params: &SolverParams,
) -> Result<(f64, f64), SolverError> {
    let h = candidate.hypothesis.reversed();
    let back = refine(
        &candidate.transform.inverse(),
        [&target[0].points, &target[1].points],
        &lines_of(source),
        &h,
        params,
    )?;
    Ok(back.transform.inverse().difference(&candidate.transform))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::stream_rng;
    use proptest::prelude::*;
    use rand::Rng;

    fn random_transform(rng: &mut impl Rng, angle: f64, dist: f64) -> RigidTransform {
        let w = Vec3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        let t = Vec3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        RigidTransform::new(Rotation::exp(&(w.normalize() * angle)), t * dist)
    }

    fn sample(line: &Line3, n: usize) -> Vec<Vec3> {
        (0..n)
            .map(|i| line.point_at(-1.0 + 2.5 * i as f64 / (n - 1) as f64))
            .collect()
    }

    /// Exact pole pairs: target lines in LiDAR-1, source points and lines in
    /// LiDAR-2, related by `truth` (LiDAR-2 → LiDAR-1).
    struct ExactScene {
        truth: RigidTransform,
        target: [FittedPole; 2],
        source: [FittedPole; 2],
    }

    fn exact_scene(seed: u64) -> ExactScene {
        let mut rng = stream_rng(seed, &[7]);
        let angle = rng.random_range(0.1..1.0);
        let truth = random_transform(&mut rng, angle, 2.0);
        let world = [
            Line3::new(
                Vec3::new(0.0, -2.5, 0.0),
                Vec3::new(0.2, 0.1, 1.0),
            )
            .unwrap(),
            Line3::new(
                Vec3::new(0.3, 2.2, 0.0),
                Vec3::new(-0.15, 0.25, 1.0),
            )
            .unwrap(),
        ];
        let source_lines = world.map(|l| l.transformed(&truth.inverse()));
        let mk = |l: &Line3| FittedPole::from_points(sample(l, 40)).unwrap();
        ExactScene {
            truth,
            target: [mk(&world[0]), mk(&world[1])],
            source: [mk(&source_lines[0]), mk(&source_lines[1])],
        }
    }

    #[test]
    fn eight_distinct_hypotheses_closed_under_double_flip() {
        let hs = enumerate_hypotheses();
        assert_eq!(hs.len(), 8);
        for (i, h) in hs.iter().enumerate() {
            assert_eq!(h.index(), i);
            assert!(hs.contains(&h.flipped()));
            assert_eq!(h.reversed().reversed(), *h);
        }
        let mut d = hs.clone();
        d.sort();
        d.dedup();
        assert_eq!(d.len(), 8);
        assert_eq!(hs[0].to_string(), "direct++");
    }

    #[test]
    fn identical_pairs_give_identity() {
        let s = exact_scene(1);
        let lines = lines_of(&s.target);
        let h = enumerate_hypotheses()[0];
        let t = closed_form_init(&h, &lines, &lines).unwrap();
        let (a, d) = t.difference(&RigidTransform::identity());
        assert!(a < 1e-9 && d < 1e-9);
    }

    #[test]
    fn closed_form_recovers_exact_transform_and_wrong_signs_are_far() {
        for seed in 0..20 {
            let s = exact_scene(seed);
            let (tl, sl) = (lines_of(&s.target), lines_of(&s.source));
            let h = hypothesis_for_transform(&s.truth, &tl, &sl);
            let t = closed_form_init(&h, &tl, &sl).unwrap();
            let (a, d) = t.difference(&s.truth);
            assert!(a < 1e-9 && d < 1e-9, "seed {seed}: {a} {d}");
            for other in enumerate_hypotheses() {
                if other.pairing == h.pairing && other != h {
                    let w = closed_form_init(&other, &tl, &sl).unwrap();
                    assert!(w.difference(&s.truth).0 >= std::f64::consts::FRAC_PI_2 - 1e-9);
                }
            }
        }
    }

    #[test]
    fn exact_data_symmetric_hypotheses_reach_zero_cost() {
        // Two skew lines are preserved by a group of four rigid motions, so
        // the truth and its three images all fit exactly.
        for seed in 0..10 {
            let s = exact_scene(seed);
            let results: Vec<CandidateResult> = solve_all(&s.target, &s.source, &SolverParams::default())
                .into_iter()
                .map(|r| r.unwrap())
                .collect();
            let (tl, sl) = (lines_of(&s.target), lines_of(&s.source));
            let truth_h = hypothesis_for_transform(&s.truth, &tl, &sl);
            let truth_res = &results[truth_h.index()];
            assert!(truth_res.final_cost < 1e-16);
            assert!(truth_res.converged);
            let (a, d) = truth_res.transform.difference(&s.truth);
            assert!(a < 1e-9 && d < 1e-9);
            let symmetric = [
                truth_h.flipped(),
                Hypothesis { pairing: match truth_h.pairing { Pairing::Direct => Pairing::Swapped, Pairing::Swapped => Pairing::Direct }, signs: [truth_h.signs[1], truth_h.signs[0]] },
            ];
            for h in symmetric {
                let r = &results[h.index()];
                assert!(r.final_cost < 1e-16, "seed {seed} {h}: {}", r.final_cost);
                assert!(r.transform.difference(&s.truth).0 > 0.1);
            }
            let zero = results.iter().filter(|r| r.final_cost < 1e-16).count();
            assert!(zero >= 4, "seed {seed}: {zero}");
        }
    }

    #[test]
    fn cost_trace_never_increases() {
        let s = exact_scene(3);
        for r in solve_all(&s.target, &s.source, &SolverParams::default()) {
            let r = r.unwrap();
            assert!(r
                .cost_trace
                .windows(2)
                .all(|w| w[1] <= w[0] * (1.0 + COST_TIE)));
            assert!(r.iterations <= 100);
        }
    }

    #[test]
    fn reverse_direction_agrees_on_exact_data() {
        let s = exact_scene(5);
        let (tl, sl) = (lines_of(&s.target), lines_of(&s.source));
        let h = hypothesis_for_transform(&s.truth, &tl, &sl);
        let params = SolverParams::default();
        let c = solve_hypothesis(&h, &s.target, &s.source, &params).unwrap();
        let (a, d) = reverse_consistency(&c, &s.target, &s.source, &params).unwrap();
        assert!(a < 2e-9 && d < 2e-9, "{a} {d}");
    }

    #[test]
    fn parallel_lines_are_rejected() {
        let l = Line3::new(Vec3::zeros(), Vec3::z()).unwrap();
        let m = Line3::new(Vec3::x(), Vec3::z()).unwrap();
        let h = enumerate_hypotheses()[0];
        let ok = [l, Line3::new(Vec3::x(), Vec3::y()).unwrap()];
        assert!(matches!(
            closed_form_init(&h, &ok, &[l, m]),
            Err(SolverError::ParallelLines { side: "source" })
        ));
        assert!(matches!(
            closed_form_init(&h, &[l, m], &ok),
            Err(SolverError::ParallelLines { side: "target" })
        ));
    }

    #[test]
    fn huber_variant_converges_on_exact_data() {
        let s = exact_scene(2);
        let (tl, sl) = (lines_of(&s.target), lines_of(&s.source));
        let h = hypothesis_for_transform(&s.truth, &tl, &sl);
        let params = SolverParams {
            huber_delta: Some(0.018),
            ..SolverParams::default()
        };
        let c = solve_hypothesis(&h, &s.target, &s.source, &params).unwrap();
        assert!(c.transform.difference(&s.truth).1 < 1e-9);
    }

    fn central_difference(t: &RigidTransform, p: &Vec3, line: &Line3) -> Matrix3x6<f64> {
        let eps = 1e-6;
        let mut j = Matrix3x6::zeros();
        for i in 0..6 {
            let mut d = Vector6::zeros();
            d[i] = eps;
            let plus = residual(&perturb(t, &d), p, line);
            let minus = residual(&perturb(t, &-d), p, line);
            j.set_column(i, &((plus - minus) / (2.0 * eps)));
        }
        j
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn jacobian_matches_finite_differences(seed in 0u64..1_000_000) {
            let mut rng = stream_rng(seed, &[11]);
            let angle = rng.random_range(0.0..3.0);
            let t = random_transform(&mut rng, angle, 5.0);
            let p = Vec3::new(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0));
            let line = Line3::new(
                Vec3::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0), 0.0),
                Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), 1.0),
            ).unwrap();
            let analytic = residual_jacobian(&t, &p, &line);
            let numeric = central_difference(&t, &p, &line);
            let err = (analytic - numeric).norm() / analytic.norm().max(1e-12);
            prop_assert!(err < 1e-5, "relative error {}", err);
        }

        #[test]
        fn relative_transform_is_equivariant(seed in 0u64..1000, m_seed in 0u64..1000) {
            let s = exact_scene(seed);
            let mut rng = stream_rng(m_seed, &[13]);
            let m1 = random_transform(&mut rng, 1.0, 3.0);
            let m2 = random_transform(&mut rng, 1.0, 3.0);
            let moved = |poles: &[FittedPole; 2], m: &RigidTransform| {
                poles.clone().map(|p| FittedPole::from_points(p.points.iter().map(|q| m.apply(q)).collect()).unwrap())
            };
            let params = SolverParams::default();
            let a = solve_all(&s.target, &s.source, &params);
            let b = solve_all(&moved(&s.target, &m1), &moved(&s.source, &m2), &params);
            // Line sign canonicalization may relabel hypotheses; compare the sets.
            let base: Vec<RigidTransform> = a.into_iter().map(|r| r.unwrap().transform).collect();
            for r in b {
                let t = m1.inverse().compose(&r.unwrap().transform).compose(&m2);
                let best = base.iter().map(|u| { let (x, y) = u.difference(&t); x + y }).fold(f64::INFINITY, f64::min);
                prop_assert!(best < 1e-8, "{}", best);
            }
        }
    }
}

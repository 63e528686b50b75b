//! Evaluation against known ground truth and the seeded experiment harnesses.

use rayon::prelude::*;

use crate::cloud::PointCloud;
use crate::extract::{fit_line, FittedPole};
use crate::geometry::{point_to_line_distance, Line3, RigidTransform, Vec3};
use crate::metrics::{
    axis_fit_error, extrinsic_error_e_rt, rqe_score, AxisFitConfig, Integrand, MetricsError,
    RqeConfig,
};
use crate::pipeline::{calibrate, Calibration, CalibrationError, CalibrationParams};
use crate::sim::{
    canonicalize_pole_frame, generate_scan, noiseless_pole_returns, random_scenario, LidarModel,
    PoleSpec, Scenario, SimError, REFERENCE_Q1, REFERENCE_Q2,
};

/// Merges `scan1` with `scan2` carried into the LiDAR-1 frame by `extrinsic`.
pub fn merged_scene(scan1: &PointCloud, scan2: &PointCloud, extrinsic: &RigidTransform) -> PointCloud {
    scan1.merged(&scan2.transformed(extrinsic))
}

pub fn rqe_of_extrinsic(
    scan1: &PointCloud,
    scan2: &PointCloud,
    extrinsic: &RigidTransform,
    cfg: &RqeConfig,
) -> Result<f64, MetricsError> {
    rqe_score(&merged_scene(scan1, scan2, extrinsic), cfg)
}

/// Index of the true pole whose axis best matches `line`, both in world
/// coordinates.
fn matching_pole(line: &Line3, poles: &[PoleSpec; 2]) -> usize {
    let mismatch = |p: &PoleSpec| {
        let axis = p.axis();
        line.angle_to(&axis) + point_to_line_distance(line.anchor(), &axis)
    };
    if mismatch(&poles[1]) < mismatch(&poles[0]) {
        1
    } else {
        0
    }
}

/// Axis-fit error of a pole fitted in the scan of `lidar`, measured in the
/// canonical frame of the true pole it matches, over the z-range of its
/// points.
pub fn pole_axis_fit_error(
    scenario: &Scenario,
    lidar: usize,
    pole: &FittedPole,
    integrand: Integrand,
) -> Result<(usize, f64), SimError> {
    let pose = &scenario.lidar_poses[lidar];
    let index = matching_pole(&pole.line.transformed(pose), &scenario.poles);
    let frame = canonicalize_pole_frame(pose, &scenario.poles[index])?;
    let to_pole = &frame.lidar_to_pole;
    let points: Vec<Vec3> = pole.points.iter().map(|p| to_pole.apply(p)).collect();
    let cfg = AxisFitConfig::spanning(&points, integrand);
    let err = axis_fit_error(&pole.line.transformed(to_pole), &cfg)
        .map_err(|e| SimError::DegenerateGeometry(e.to_string()))?;
    Ok((index, err))
}

/// One cell of the axis-fit study.
#[derive(Clone, Debug, PartialEq)]
pub struct AxisFitSample {
    pub x_p: f64,
    pub radius: f64,
    /// `"q1"` or `"q2"`.
    pub orientation: &'static str,
    pub points: usize,
    pub sum: f64,
    pub product: f64,
}

pub const SWEEP_DISTANCES: [f64; 3] = [10.0, 6.0, 4.0];
pub const SWEEP_RADII: [f64; 3] = [0.3, 0.2, 0.1];

/// Fits a line to the noiseless returns of a pole on the z-axis seen from
/// `[x_p, 0, 0]` with orientation `q`, and scores it in both integrand modes
/// over the z-range of the returns.
pub fn axis_fit_sample(x_p: f64, radius: f64, q: [f64; 4]) -> Result<(usize, f64, f64), SimError> {
    let pose = RigidTransform::from_quaternion_translation(q, Vec3::new(x_p, 0.0, 0.0))?;
    let pole = PoleSpec {
        anchor: Vec3::zeros(),
        direction: Vec3::z(),
        radius,
        z_extent: [-1e3, 1e3],
        reflective: true,
    };
    let points: Vec<Vec3> = noiseless_pole_returns(&pose, &pole, &LidarModel::vlp16(0.0))?
        .into_iter()
        .map(|(p, _)| p)
        .collect();
    let (line, _) = fit_line(&points).map_err(|e| SimError::DegenerateGeometry(e.to_string()))?;
    let score = |mode| {
        axis_fit_error(&line, &AxisFitConfig::spanning(&points, mode))
            .map_err(|e| SimError::DegenerateGeometry(e.to_string()))
    };
    Ok((points.len(), score(Integrand::Sum)?, score(Integrand::Product)?))
}

/// The full grid: both orientations, every distance, radii large to small.
pub fn axis_fit_sweep() -> Result<Vec<AxisFitSample>, SimError> {
    let mut out = Vec::new();
    for (orientation, q) in [("q1", REFERENCE_Q1), ("q2", REFERENCE_Q2)] {
        for x_p in SWEEP_DISTANCES {
            for radius in SWEEP_RADII {
                let (points, sum, product) = axis_fit_sample(x_p, radius, q)?;
                out.push(AxisFitSample {
                    x_p,
                    radius,
                    orientation,
                    points,
                    sum,
                    product,
                });
            }
        }
    }
    Ok(out)
}

pub fn axis_fit_sweep_tsv(samples: &[AxisFitSample]) -> String {
    let mut out = String::from("orientation\tx_p\tr\tpoints\tsum\tproduct\n");
    for s in samples {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{:.6e}\t{:.6e}\n",
            s.orientation, s.x_p, s.radius, s.points, s.sum, s.product
        ));
    }
    out
}

/// Outcome of calibrating one seeded scenario.
#[derive(Clone, Debug, PartialEq)]
pub struct Trial {
    pub seed: u64,
    pub e_rt: f64,
    /// Rotation and translation difference from the ground truth.
    pub e_r: f64,
    pub e_t: f64,
    pub selected: usize,
    pub truth_candidate: usize,
    /// The selection converged to the same transform as the ground-truth
    /// hypothesis, within 1e-6. Hypotheses that differ only in direction
    /// signs often converge together, so indices alone undercount.
    pub selected_truth: bool,
}

pub fn run_trial(
    scenario: &Scenario,
    params: &CalibrationParams,
) -> Result<(Trial, Calibration), CalibrationError> {
    let scan = |i| generate_scan(scenario, i).expect("random scenarios are valid");
    let calib = calibrate(&scan(0), &scan(1), params)?;
    let truth = scenario.ground_truth();
    let result = calib.transform();
    let (e_r, e_t) = result.difference(&truth);
    let truth_candidate = calib.hypothesis_index_for(&truth);
    let selected_truth = calib.candidates[truth_candidate].as_ref().is_ok_and(|c| {
        let (a, d) = c.transform.difference(&result);
        a < 1e-6 && d < 1e-6
    });
    let trial = Trial {
        seed: scenario.seed,
        e_rt: extrinsic_error_e_rt(&result, &truth),
        e_r,
        e_t,
        selected: calib.selected,
        truth_candidate,
        selected_truth,
    };
    Ok((trial, calib))
}

/// Calibrates `random_scenario(seed)` at noise `sigma` for every seed, in
/// parallel. Results come back in seed order.
pub fn noise_trials(
    seeds: impl IntoIterator<Item = u64>,
    sigma: f64,
    params: &CalibrationParams,
) -> Vec<Result<Trial, CalibrationError>> {
    let seeds: Vec<u64> = seeds.into_iter().collect();
    seeds
        .par_iter()
        .map(|&seed| {
            let mut s = random_scenario(seed);
            s.lidar.noise_sigma = sigma;
            run_trial(&s, params).map(|(t, _)| t)
        })
        .collect()
}

pub fn trials_tsv(trials: &[Trial]) -> String {
    let mut out = String::from("seed\te_rt\te_r\te_t\tselected\ttruth_candidate\tselected_truth\n");
    for t in trials {
        out.push_str(&format!(
            "{}\t{:.6e}\t{:.6e}\t{:.6e}\t{}\t{}\t{}\n",
            t.seed, t.e_rt, t.e_r, t.e_t, t.selected, t.truth_candidate, t.selected_truth
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::generate_scan;

    #[test]
    fn sweep_values_shrink_with_radius() {
        let s = axis_fit_sweep().unwrap();
        assert_eq!(s.len(), 18);
        for w in s.chunks(3) {
            assert!(w[0].sum > w[1].sum && w[1].sum > w[2].sum, "{w:?}");
        }
        let tsv = axis_fit_sweep_tsv(&s);
        assert_eq!(tsv.lines().count(), 19);
    }

    #[test]
    fn fitted_poles_of_a_noisy_scene_sit_near_their_axes() {
        let s = random_scenario(5);
        let (trial, calib) = run_trial(&s, &CalibrationParams::default()).unwrap();
        assert!(trial.e_rt.is_finite());
        for lidar in 0..2 {
            let mut seen = [false; 2];
            for pole in &calib.poles[lidar] {
                let (idx, err) = pole_axis_fit_error(&s, lidar, pole, Integrand::Sum).unwrap();
                seen[idx] = true;
                assert!(err < 0.05 * 0.05, "{err}");
            }
            assert_eq!(seen, [true, true]);
        }
    }

    #[test]
    fn true_extrinsic_merges_crisper_than_an_offset_one() {
        let s = random_scenario(2);
        let (a, b) = (generate_scan(&s, 0).unwrap(), generate_scan(&s, 1).unwrap());
        let cfg = RqeConfig {
            subsample_size: 1500,
            ..RqeConfig::default()
        };
        let gt = s.ground_truth();
        let off = RigidTransform::from_translation(Vec3::new(0.3, 0.0, 0.0)).compose(&gt);
        assert!(rqe_of_extrinsic(&a, &b, &gt, &cfg).unwrap() > rqe_of_extrinsic(&a, &b, &off, &cfg).unwrap());
    }
}

//! Picks the physically correct candidate by asking how much point-to-point
//! ICP over the full scenes wants to move it.

use kiddo::{ImmutableKdTree, SquaredEuclidean};
use nalgebra::SVD;
use rayon::prelude::*;
use thiserror::Error;

use crate::cloud::PointCloud;
use crate::geometry::{
    rotation_error, translation_error, Mat3, RigidTransform, Rotation, Vec3,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IcpError {
    #[error("{which} cloud is empty")]
    EmptyCloud { which: &'static str },
    #[error("fewer than 3 correspondences within {gate} m")]
    NoCorrespondences { gate: f64 },
    #[error("invalid ICP parameter: {0}")]
    InvalidParameter(String),
    #[error("no candidate has a finite score")]
    AllScoresInfinite,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IcpParams {
    pub max_iterations: usize,
    /// Stop when the relative decrease of the truncated cost falls below this.
    pub convergence_eps: f64,
    pub max_correspondence_distance: f64,
    /// Clouds above this size are stride-subsampled.
    pub subsample_size: usize,
}

impl Default for IcpParams {
    fn default() -> Self {
        Self {
            max_iterations: 50,
            convergence_eps: 1e-6,
            max_correspondence_distance: 1.0,
            subsample_size: 5000,
        }
    }
}

impl IcpParams {
    pub fn validate(&self) -> Result<(), IcpError> {
        if self.max_iterations == 0
            || !(self.convergence_eps > 0.0)
            || !(self.max_correspondence_distance > 0.0)
            || self.subsample_size == 0
        {
            return Err(IcpError::InvalidParameter(format!("{self:?}")));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IcpResult {
    /// `C` such that `C ∘ init` aligns the source with the target.
    pub correction: RigidTransform,
    pub converged: bool,
    pub iterations: usize,
    /// Mean of `min(d², gate²)` over source points, before each update and
    /// at the final pose.
    pub cost_trace: Vec<f64>,
}

/// Least-squares rigid motion taking `src[i]` to `dst[i]` (Kabsch).
pub fn best_rigid_fit(src: &[Vec3], dst: &[Vec3]) -> RigidTransform {
    let n = src.len() as f64;
    let cs = src.iter().sum::<Vec3>() / n;
    let cd = dst.iter().sum::<Vec3>() / n;
    let h = src
        .iter()
        .zip(dst)
        .fold(Mat3::zeros(), |acc, (p, q)| acc + (p - cs) * (q - cd).transpose());
    let svd = SVD::new(h, true, true);
    let (u, vt) = (svd.u.expect("u requested"), svd.v_t.expect("v requested"));
    let v = vt.transpose();
    let d = (v * u.transpose()).determinant().signum();
    let r = v * Mat3::from_diagonal(&Vec3::new(1.0, 1.0, d)) * u.transpose();
    let rotation = Rotation::nearest_to(&r);
    RigidTransform::new(rotation, cd - rotation.apply(&cs))
}

fn as_array(p: &Vec3) -> [f64; 3] {
    [p.x, p.y, p.z]
}

/// Point-to-point ICP of `source` onto `target`, starting from `init`.
pub fn icp_register(
    source: &PointCloud,
    target: &PointCloud,
    init: &RigidTransform,
    params: &IcpParams,
) -> Result<IcpResult, IcpError> {
    params.validate()?;
    if source.is_empty() {
        return Err(IcpError::EmptyCloud { which: "source" });
    }
    if target.is_empty() {
        return Err(IcpError::EmptyCloud { which: "target" });
    }
    let source = source.stride_subsample(params.subsample_size);
    let target = target.stride_subsample(params.subsample_size);
    let tpts = target.points();
    let tree: ImmutableKdTree<f64, 3> =
        ImmutableKdTree::new_from_slice(&tpts.iter().map(as_array).collect::<Vec<_>>());
    let gate = params.max_correspondence_distance;
    let gate2 = gate * gate;

    let mut current = *init;
    let mut trace: Vec<f64> = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    let mut src = Vec::with_capacity(source.len());
    let mut dst = Vec::with_capacity(source.len());

    loop {
        src.clear();
        dst.clear();
        let mut cost = 0.0;
        for p in source.points() {
            let q = current.apply(p);
            let nn = tree.nearest_one::<SquaredEuclidean>(&as_array(&q));
            cost += nn.distance.min(gate2);
            if nn.distance <= gate2 {
                src.push(q);
                dst.push(tpts[nn.item as usize]);
            }
        }
        cost /= source.len() as f64;
        if let Some(&prev) = trace.last() {
            if prev - cost <= params.convergence_eps * prev.max(f64::MIN_POSITIVE) {
                converged = true;
            }
        }
        trace.push(cost);
        if converged || iterations == params.max_iterations {
            break;
        }
        // Fewer than three pairs cannot fix a rotation.
        if src.len() < 3 {
            return Err(IcpError::NoCorrespondences { gate });
        }
        current = best_rigid_fit(&src, &dst).compose(&current);
        iterations += 1;
    }

    Ok(IcpResult {
        correction: current.compose(&init.inverse()),
        converged,
        iterations,
        cost_trace: trace,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct CandidateScore {
    pub e_r: f64,
    pub e_t: f64,
    pub icp_correction: RigidTransform,
    pub icp_converged: bool,
}

impl CandidateScore {
    pub fn infinite() -> Self {
        Self {
            e_r: f64::INFINITY,
            e_t: f64::INFINITY,
            icp_correction: RigidTransform::identity(),
            icp_converged: false,
        }
    }

    /// `e_r + κ·e_t`.
    pub fn combined(&self, kappa: f64) -> f64 {
        self.e_r + kappa * self.e_t
    }
}

/// Distance to identity of the ICP correction of `candidate`, with the
/// LiDAR-2 scene as source and the LiDAR-1 scene as target. ICP failures
/// give an infinite score.
pub fn score_candidate(
    candidate: &RigidTransform,
    target_scene: &PointCloud,
    source_scene: &PointCloud,
    params: &IcpParams,
) -> CandidateScore {
    match icp_register(source_scene, target_scene, candidate, params) {
        Ok(r) => CandidateScore {
            e_r: rotation_error(&r.correction.rotation),
            e_t: translation_error(&r.correction.translation),
            icp_correction: r.correction,
            icp_converged: r.converged,
        },
        Err(_) => CandidateScore::infinite(),
    }
}

/// Scores every candidate in parallel; order follows `candidates`.
pub fn score_all(
    candidates: &[Option<RigidTransform>],
    target_scene: &PointCloud,
    source_scene: &PointCloud,
    params: &IcpParams,
) -> Vec<CandidateScore> {
    candidates
        .par_iter()
        .map(|c| match c {
            Some(t) => score_candidate(t, target_scene, source_scene, params),
            None => CandidateScore::infinite(),
        })
        .collect()
}

/// Weight of the translation error in the combined score, rad/m.
pub const KAPPA: f64 = 1.0;

/// Index of the finite score minimizing `e_r + κ·e_t`; ties go to the
/// lowest index.
pub fn select_best(scores: &[CandidateScore], kappa: f64) -> Result<usize, IcpError> {
    scores
        .iter()
        .enumerate()
        .map(|(i, s)| (i, s.combined(kappa)))
        .filter(|(_, v)| v.is_finite())
        .fold(None, |best: Option<(usize, f64)>, (i, v)| match best {
            Some((_, b)) if b <= v => best,
            _ => Some((i, v)),
        })
        .map(|(i, _)| i)
        .ok_or(IcpError::AllScoresInfinite)
}

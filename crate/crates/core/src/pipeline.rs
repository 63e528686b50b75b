//! Extraction → eight candidates → disambiguation, on one pair of scans.

use thiserror::Error;

use crate::cloud::PointCloud;
use crate::disambiguate::{score_all, select_best, CandidateScore, IcpError, IcpParams, KAPPA};
use crate::extract::{extract_poles, ExtractError, ExtractParams, FittedPole};
use crate::geometry::{Line3, RigidTransform};
use crate::solver::{
    hypothesis_for_transform, solve_all, CandidateResult, SolverError, SolverParams,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CalibrationError {
    #[error("LiDAR {lidar}: {source}")]
    Extract {
        lidar: usize,
        #[source]
        source: ExtractError,
    },
    #[error("every hypothesis failed; first error: {0}")]
    Solver(SolverError),
    #[error(transparent)]
    Disambiguation(#[from] IcpError),
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct CalibrationParams {
    pub extract: ExtractParams,
    pub solver: SolverParams,
    pub icp: IcpParams,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Calibration {
    /// Poles fitted in LiDAR-1 (target) and LiDAR-2 (source).
    pub poles: [[FittedPole; 2]; 2],
    /// One entry per hypothesis, in enumeration order.
    pub candidates: Vec<Result<CandidateResult, SolverError>>,
    pub scores: Vec<CandidateScore>,
    pub selected: usize,
}

impl Calibration {
    /// Selected LiDAR-2 → LiDAR-1 transform.
    pub fn transform(&self) -> RigidTransform {
        self.candidates[self.selected]
            .as_ref()
            .expect("selected candidate has a finite score")
            .transform
    }

    pub fn lines(&self, lidar: usize) -> [Line3; 2] {
        [
            self.poles[lidar][0].line,
            self.poles[lidar][1].line,
        ]
    }

    /// Index of the hypothesis consistent with a known LiDAR-2 → LiDAR-1
    /// transform.
    pub fn hypothesis_index_for(&self, truth: &RigidTransform) -> usize {
        hypothesis_for_transform(truth, &self.lines(0), &self.lines(1)).index()
    }
}

/// Calibrates LiDAR-2 (`scan2`) against LiDAR-1 (`scan1`).
pub fn calibrate(
    scan1: &PointCloud,
    scan2: &PointCloud,
    params: &CalibrationParams,
) -> Result<Calibration, CalibrationError> {
    let extract = |lidar: usize, scan: &PointCloud| {
        extract_poles(scan, &params.extract)
            .map_err(|source| CalibrationError::Extract { lidar, source })
    };
    let target = extract(0, scan1)?;
    let source = extract(1, scan2)?;
    let candidates = solve_all(&target, &source, &params.solver);
    if candidates.iter().all(|c| c.is_err()) {
        let first = candidates[0].clone().unwrap_err();
        return Err(CalibrationError::Solver(first));
    }
    let inits: Vec<Option<RigidTransform>> = candidates
        .iter()
        .map(|c| c.as_ref().ok().map(|c| c.transform))
        .collect();
    let scores = score_all(&inits, scan1, scan2, &params.icp);
    let selected = select_best(&scores, KAPPA)?;
    Ok(Calibration {
        poles: [target, source],
        candidates,
        scores,
        selected,
    })
}

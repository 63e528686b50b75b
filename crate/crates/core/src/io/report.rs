use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::{read_text, write_text, IoError};
use crate::geometry::{RigidTransform, Vec3};
use crate::sim::{LidarModel, PoleSpec, Scenario};

pub const TOOL_NAME: &str = "polecal";

fn to_toml<T: Serialize>(value: &T) -> String {
    toml::to_string(value).expect("record types are TOML-representable")
}

fn from_toml<T: DeserializeOwned>(text: &str, what: &str) -> Result<T, IoError> {
    toml::from_str(text).map_err(|e| IoError::Parse {
        what: what.into(),
        message: e.to_string(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoseRecord {
    /// `[w, x, y, z]`, `w ≥ 0`.
    pub quaternion: [f64; 4],
    pub translation: [f64; 3],
}

impl PoseRecord {
    pub fn from_transform(t: &RigidTransform) -> Self {
        Self {
            quaternion: t.rotation.to_quaternion(),
            translation: t.translation.into(),
        }
    }

    pub fn to_transform(&self) -> Result<RigidTransform, IoError> {
        RigidTransform::from_quaternion_translation(self.quaternion, Vec3::from(self.translation))
            .map_err(|e| IoError::InvalidReport(format!("pose: {e}")))
    }

    fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.quaternion.iter().chain(&self.translation).copied()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoleRecord {
    pub anchor: [f64; 3],
    pub direction: [f64; 3],
    pub radius: f64,
    pub z_extent: [f64; 2],
    pub reflective: bool,
}

/// Everything needed to regenerate and evaluate a simulated pair of scans.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub seed: u64,
    pub sigma: f64,
    pub environment: bool,
    pub scans: [String; 2],
    pub channel_elevations_deg: Vec<f64>,
    pub azimuth_resolution_deg: f64,
    pub max_range: f64,
    /// LiDAR-2 → LiDAR-1.
    pub ground_truth: PoseRecord,
    /// Sensor → world.
    pub lidar_poses: Vec<PoseRecord>,
    pub poles: Vec<PoleRecord>,
}

impl Manifest {
    pub fn from_scenario(s: &Scenario, scans: [String; 2]) -> Self {
        Self {
            seed: s.seed,
            sigma: s.lidar.noise_sigma,
            environment: s.environment,
            scans,
            channel_elevations_deg: s.lidar.channel_elevations.iter().map(|e| e.to_degrees()).collect(),
            azimuth_resolution_deg: s.lidar.azimuth_resolution.to_degrees(),
            max_range: s.lidar.max_range,
            ground_truth: PoseRecord::from_transform(&s.ground_truth()),
            lidar_poses: s.lidar_poses.iter().map(PoseRecord::from_transform).collect(),
            poles: s
                .poles
                .iter()
                .map(|p| PoleRecord {
                    anchor: p.anchor.into(),
                    direction: p.direction.into(),
                    radius: p.radius,
                    z_extent: p.z_extent,
                    reflective: p.reflective,
                })
                .collect(),
        }
    }

    /// Scenario with the recorded sensor poses. Rotations pass through
    /// quaternions, so they match the original to rounding.
    pub fn to_scenario(&self) -> Result<Scenario, IoError> {
        let two = |n: usize, what: &str| {
            if n == 2 {
                Ok(())
            } else {
                Err(IoError::InvalidReport(format!("manifest needs 2 {what}, has {n}")))
            }
        };
        two(self.lidar_poses.len(), "lidar poses")?;
        two(self.poles.len(), "poles")?;
        let pose = |i: usize| self.lidar_poses[i].to_transform();
        let pole = |i: usize| {
            let p = &self.poles[i];
            PoleSpec {
                anchor: Vec3::from(p.anchor),
                direction: Vec3::from(p.direction),
                radius: p.radius,
                z_extent: p.z_extent,
                reflective: p.reflective,
            }
        };
        Ok(Scenario {
            lidar_poses: [pose(0)?, pose(1)?],
            poles: [pole(0), pole(1)],
            lidar: LidarModel {
                channel_elevations: self.channel_elevations_deg.iter().map(|e| e.to_radians()).collect(),
                azimuth_resolution: self.azimuth_resolution_deg.to_radians(),
                max_range: self.max_range,
                noise_sigma: self.sigma,
            },
            seed: self.seed,
            environment: self.environment,
        })
    }

    pub fn to_toml_string(&self) -> String {
        to_toml(self)
    }

    pub fn from_toml_str(text: &str) -> Result<Self, IoError> {
        from_toml(text, "manifest")
    }

    pub fn load(path: &Path) -> Result<Self, IoError> {
        Self::from_toml_str(&read_text(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<(), IoError> {
        write_text(path, &self.to_toml_string())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub seed: u64,
    pub config_sha256: String,
    /// File names of the LiDAR-1 and LiDAR-2 scans.
    pub inputs: [String; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelectedRecord {
    pub index: usize,
    pub label: String,
    pub hypothesis: String,
    /// LiDAR-2 → LiDAR-1.
    pub extrinsic: PoseRecord,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CandidateRecord {
    pub index: usize,
    pub label: String,
    pub hypothesis: String,
    /// `ok`, or `failed` with `error` set.
    pub status: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_cost: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub converged: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub e_r: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub e_t: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub icp_converged: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extrinsic: Option<PoseRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoleFitRecord {
    pub lidar: usize,
    pub pole: usize,
    pub anchor: [f64; 3],
    pub direction: [f64; 3],
    pub inlier_count: usize,
    pub rms_residual: f64,
    pub z_span: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisFitRecord {
    pub lidar: usize,
    pub pole: usize,
    pub integrand: String,
    pub error: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsRecord {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub e_rt: Option<f64>,
    /// Rotation angle between the selected extrinsic and the ground truth.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub e_r_truth: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub e_t_truth: Option<f64>,
    /// Hypothesis consistent with the ground truth.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth_candidate: Option<usize>,
    pub rqe: f64,
    #[serde(default)]
    pub axis_fit: Vec<AxisFitRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunReport {
    pub provenance: Provenance,
    pub selected: SelectedRecord,
    pub candidates: Vec<CandidateRecord>,
    pub poles: Vec<PoleFitRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metrics: Option<MetricsRecord>,
}

impl RunReport {
    pub fn to_toml_string(&self) -> String {
        to_toml(self)
    }

    pub fn from_toml_str(text: &str) -> Result<Self, IoError> {
        from_toml(text, "report")
    }

    pub fn load(path: &Path) -> Result<Self, IoError> {
        let r = Self::from_toml_str(&read_text(path)?)?;
        r.validate()?;
        Ok(r)
    }

    pub fn save(&self, path: &Path) -> Result<(), IoError> {
        self.validate()?;
        write_text(path, &self.to_toml_string())
    }

    /// Checks the documented shape: eight candidates in order, a selection
    /// that points at a successful one, and only finite numbers.
    pub fn validate(&self) -> Result<(), IoError> {
        let bad = |m: String| Err(IoError::InvalidReport(m));
        if self.candidates.len() != 8 {
            return bad(format!("expected 8 candidates, found {}", self.candidates.len()));
        }
        for (i, c) in self.candidates.iter().enumerate() {
            if c.index != i {
                return bad(format!("candidate {i} has index {}", c.index));
            }
            match c.status.as_str() {
                "ok" if c.extrinsic.is_some() && c.final_cost.is_some() => {}
                "failed" if c.error.is_some() => {}
                other => return bad(format!("candidate {i}: inconsistent status {other:?}")),
            }
        }
        let sel = &self.candidates.get(self.selected.index);
        if sel.is_none_or(|c| c.status != "ok") {
            return bad(format!("selected index {} is not a successful candidate", self.selected.index));
        }
        let mut numbers: Vec<f64> = self.selected.extrinsic.values().collect();
        for c in &self.candidates {
            numbers.extend(c.final_cost.iter().chain(&c.e_r).chain(&c.e_t));
            if let Some(p) = &c.extrinsic {
                numbers.extend(p.values());
            }
        }
        for p in &self.poles {
            numbers.extend(p.anchor.iter().chain(&p.direction).copied());
            numbers.extend([p.rms_residual, p.z_span]);
        }
        if let Some(m) = &self.metrics {
            numbers.extend(m.e_rt.iter().chain(&m.e_r_truth).chain(&m.e_t_truth));
            numbers.push(m.rqe);
            numbers.extend(m.axis_fit.iter().map(|a| a.error));
        }
        if let Some(v) = numbers.iter().find(|v| !v.is_finite()) {
            return bad(format!("non-finite value {v}"));
        }
        Ok(())
    }
}

/// Per-candidate score table, one row per hypothesis.
pub fn candidates_tsv(report: &RunReport) -> String {
    let mut out = String::from("candidate\thypothesis\tstatus\te_r\te_t\tfinal_cost\tselected\n");
    let opt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |v| format!("{v:.6}"));
    for c in &report.candidates {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
            c.label,
            c.hypothesis,
            c.status,
            opt(c.e_r),
            opt(c.e_t),
            c.final_cost.map_or_else(|| "-".to_string(), |v| format!("{v:.6e}")),
            if c.index == report.selected.index { "*" } else { "" }
        ));
    }
    out
}

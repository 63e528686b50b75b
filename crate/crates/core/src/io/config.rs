use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{read_text, IoError};
use crate::disambiguate::IcpParams;
use crate::extract::{ExtractParams, ThresholdTable};
use crate::metrics::{AxisFitConfig, Integrand, RqeConfig};
use crate::pipeline::CalibrationParams;
use crate::solver::SolverParams;

/// Environment variable naming a config file when `--config` is absent.
pub const CONFIG_ENV: &str = "POLECAL_CONFIG";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub output_dir: PathBuf,
    pub input: InputConfig,
    pub scenario: ScenarioConfig,
    pub extract: ExtractConfig,
    pub solver: SolverConfig,
    pub icp: IcpConfig,
    pub metrics: MetricsConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            output_dir: PathBuf::from("out"),
            input: InputConfig::default(),
            scenario: ScenarioConfig::default(),
            extract: ExtractConfig::default(),
            solver: SolverConfig::default(),
            icp: IcpConfig::default(),
            metrics: MetricsConfig::default(),
        }
    }
}

/// Existing scans to calibrate instead of simulating.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InputConfig {
    pub lidar1: Option<PathBuf>,
    pub lidar2: Option<PathBuf>,
    /// Ground truth for evaluation.
    pub manifest: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub sigma: f64,
    pub environment: bool,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            sigma: 0.006,
            environment: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtractConfig {
    pub manufacturer: Option<String>,
    /// Overrides the manufacturer lookup.
    pub threshold: Option<f64>,
    pub eps: f64,
    pub min_points: usize,
    pub pole_radius: f64,
    /// Extra or replacement manufacturer thresholds.
    pub thresholds: BTreeMap<String, f64>,
}

impl Default for ExtractConfig {
    fn default() -> Self {
        let d = ExtractParams::default();
        Self {
            manufacturer: None,
            threshold: None,
            eps: d.eps,
            min_points: d.min_points,
            pole_radius: d.pole_radius,
            thresholds: BTreeMap::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub max_iterations: usize,
    pub step_tolerance: f64,
    pub gradient_tolerance: f64,
    pub initial_lambda: f64,
    /// Huber loss with threshold 3σ, σ = `scenario.sigma`.
    pub huber: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let d = SolverParams::default();
        Self {
            max_iterations: d.max_iterations,
            step_tolerance: d.step_tolerance,
            gradient_tolerance: d.gradient_tolerance,
            initial_lambda: d.initial_lambda,
            huber: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IcpConfig {
    pub max_iterations: usize,
    pub convergence_eps: f64,
    pub max_correspondence_distance: f64,
    pub subsample_size: usize,
}

impl Default for IcpConfig {
    fn default() -> Self {
        let d = IcpParams::default();
        Self {
            max_iterations: d.max_iterations,
            convergence_eps: d.convergence_eps,
            max_correspondence_distance: d.max_correspondence_distance,
            subsample_size: d.subsample_size,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsConfig {
    /// `sum` or `product`.
    pub integrand: String,
    pub rqe_kernel_sigma: f64,
    pub rqe_subsample: usize,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        let d = RqeConfig::default();
        Self {
            integrand: Integrand::default().to_string(),
            rqe_kernel_sigma: d.kernel_sigma,
            rqe_subsample: d.subsample_size,
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, IoError> {
        toml::from_str(text).map_err(|e| IoError::Parse {
            what: "config".into(),
            message: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self, IoError> {
        Self::from_toml_str(&read_text(path)?).map_err(|e| match e {
            IoError::Parse { message, .. } => IoError::Parse {
                what: path.display().to_string(),
                message,
            },
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config fields are TOML-representable")
    }

    /// SHA-256 of the canonical TOML form, hex encoded.
    pub fn sha256_hex(&self) -> String {
        Sha256::digest(self.to_toml_string().as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    pub fn threshold(&self) -> Result<f64, IoError> {
        let mut table = ThresholdTable::default();
        for (k, v) in &self.extract.thresholds {
            table
                .insert(k, *v)
                .map_err(|e| IoError::InvalidConfig(format!("extract.thresholds.{k}: {e}")))?;
        }
        Ok(match (&self.extract.threshold, &self.extract.manufacturer) {
            (Some(t), _) => *t,
            (None, Some(m)) => table.threshold_for(m),
            (None, None) => crate::extract::DEFAULT_THRESHOLD,
        })
    }

    pub fn integrand(&self) -> Result<Integrand, IoError> {
        self.metrics
            .integrand
            .parse()
            .map_err(|e| IoError::InvalidConfig(format!("metrics.integrand: {e}")))
    }

    pub fn rqe(&self) -> RqeConfig {
        RqeConfig {
            kernel_sigma: self.metrics.rqe_kernel_sigma,
            subsample_size: self.metrics.rqe_subsample,
        }
    }

    /// Axis-fit settings with a placeholder range; callers set the range
    /// from the points being evaluated.
    pub fn axis_fit(&self) -> Result<AxisFitConfig, IoError> {
        Ok(AxisFitConfig {
            integrand: self.integrand()?,
            z_min: 0.0,
            z_max: 1.0,
        })
    }

    pub fn calibration_params(&self) -> Result<CalibrationParams, IoError> {
        let s = &self.solver;
        let i = &self.icp;
        Ok(CalibrationParams {
            extract: ExtractParams {
                threshold: self.threshold()?,
                eps: self.extract.eps,
                min_points: self.extract.min_points,
                pole_radius: self.extract.pole_radius,
            },
            solver: SolverParams {
                max_iterations: s.max_iterations,
                step_tolerance: s.step_tolerance,
                gradient_tolerance: s.gradient_tolerance,
                initial_lambda: s.initial_lambda,
                huber_delta: s.huber.then_some(3.0 * self.scenario.sigma),
            },
            icp: IcpParams {
                max_iterations: i.max_iterations,
                convergence_eps: i.convergence_eps,
                max_correspondence_distance: i.max_correspondence_distance,
                subsample_size: i.subsample_size,
            },
        })
    }

    /// Checks every value and that referenced input files exist.
    pub fn validate(&self) -> Result<(), IoError> {
        let bad = |m: String| Err(IoError::InvalidConfig(m));
        if !(self.scenario.sigma >= 0.0 && self.scenario.sigma.is_finite()) {
            return bad(format!("scenario.sigma must be ≥ 0, got {}", self.scenario.sigma));
        }
        if self.solver.huber && self.scenario.sigma == 0.0 {
            return bad("solver.huber needs scenario.sigma > 0".into());
        }
        let params = self.calibration_params()?;
        if !(0.0..=255.0).contains(&params.extract.threshold) {
            return bad(format!(
                "extract.threshold must lie in [0, 255], got {}",
                params.extract.threshold
            ));
        }
        if !(self.extract.eps > 0.0) || self.extract.min_points < 2 || !(self.extract.pole_radius > 0.0) {
            return bad("extract: eps and pole_radius must be positive, min_points ≥ 2".into());
        }
        params
            .solver
            .validate()
            .map_err(|e| IoError::InvalidConfig(format!("solver: {e}")))?;
        params
            .icp
            .validate()
            .map_err(|e| IoError::InvalidConfig(format!("icp: {e}")))?;
        self.integrand()?;
        if !(self.metrics.rqe_kernel_sigma > 0.0) || self.metrics.rqe_subsample < 2 {
            return bad("metrics: rqe_kernel_sigma must be positive, rqe_subsample ≥ 2".into());
        }
        for (name, path) in [
            ("input.lidar1", &self.input.lidar1),
            ("input.lidar2", &self.input.lidar2),
            ("input.manifest", &self.input.manifest),
        ] {
            if let Some(p) = path {
                if !p.is_file() {
                    return bad(format!("{name}: {} does not exist", p.display()));
                }
            }
        }
        Ok(())
    }
}

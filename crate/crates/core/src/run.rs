//! The command-line stages: simulate, extract, calibrate, evaluate, and the
//! chained pipeline. Each reads a [`RunConfig`] and writes into its output
//! directory.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cloud::PointCloud;
use crate::experiments::{
    axis_fit_sweep, axis_fit_sweep_tsv, noise_trials, pole_axis_fit_error, rqe_of_extrinsic,
    trials_tsv, Trial,
};
use crate::extract::{extract_poles, ExtractError, FittedPole};
use crate::geometry::{Line3, RigidTransform};
use crate::io::{
    candidates_tsv, read_cloud, write_cloud, AxisFitRecord, CandidateRecord, IoError, Manifest,
    MetricsRecord, PoleFitRecord, PoseRecord, Provenance, RunConfig, RunReport, SelectedRecord,
    TOOL_NAME,
};
use crate::metrics::{extrinsic_error_e_rt, MetricsError};
use crate::pipeline::{calibrate, Calibration, CalibrationError};
use crate::sim::{generate_scan, random_scenario, Scenario, SimError};
use crate::solver::{enumerate_hypotheses, hypothesis_for_transform};

pub const SCAN_FILES: [&str; 2] = ["lidar1.pcd", "lidar2.pcd"];
pub const MANIFEST_FILE: &str = "manifest.toml";
pub const POLES_FILE: &str = "poles.toml";
pub const REPORT_FILE: &str = "report.toml";
pub const CANDIDATES_FILE: &str = "candidates.tsv";
pub const TRIALS_FILE: &str = "trials.tsv";
pub const SWEEP_FILE: &str = "axis_fit_sweep.tsv";

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Io(#[from] IoError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Calibration(#[from] CalibrationError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("{0}")]
    Usage(String),
}

impl RunError {
    /// Process exit status; each error class has its own.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Usage(_) => 2,
            RunError::Io(IoError::InvalidConfig(_)) => 3,
            RunError::Io(IoError::Parse { .. }) => 3,
            RunError::Io(IoError::InvalidReport(_)) => 4,
            RunError::Io(IoError::File { .. }) => 5,
            RunError::Io(_) => 6,
            RunError::Sim(_) => 10,
            RunError::Calibration(CalibrationError::Extract { source, .. }) => match source {
                ExtractError::NoRetroReflectiveReturns { .. } => 20,
                ExtractError::TooFewClusters { .. } => 21,
                ExtractError::ParallelPoles { .. } => 22,
                _ => 23,
            },
            RunError::Calibration(CalibrationError::Solver(_)) => 30,
            RunError::Calibration(CalibrationError::Disambiguation(_)) => 40,
            RunError::Metrics(_) => 50,
        }
    }

    pub fn module(&self) -> &'static str {
        match self {
            RunError::Usage(_) => "cli",
            RunError::Io(_) => "io",
            RunError::Sim(_) => "sim",
            RunError::Calibration(CalibrationError::Extract { .. }) => "extract",
            RunError::Calibration(CalibrationError::Solver(_)) => "solver",
            RunError::Calibration(CalibrationError::Disambiguation(_)) => "disambiguate",
            RunError::Metrics(_) => "metrics",
        }
    }

    pub fn hint(&self) -> &'static str {
        match self {
            RunError::Usage(_) => "see --help",
            RunError::Io(IoError::InvalidConfig(_) | IoError::Parse { .. }) => {
                "fix the named config key; unknown keys are rejected"
            }
            RunError::Io(IoError::InvalidReport(_)) => "re-run calibrate to regenerate the report",
            RunError::Io(IoError::File { .. }) => {
                "check the path; run simulate first or set input.lidar1/lidar2"
            }
            RunError::Io(IoError::UnknownFormat(_)) => "use a .pcd or .csv file",
            RunError::Io(_) => "clouds must be ASCII PCD (x y z intensity [ring]) or CSV x,y,z,intensity",
            RunError::Sim(_) => "check the scenario: poles must not be parallel and must be visible",
            RunError::Calibration(CalibrationError::Extract { source, .. }) => match source {
                ExtractError::NoRetroReflectiveReturns { .. } => {
                    "lower extract.threshold or set extract.manufacturer"
                }
                ExtractError::TooFewClusters { .. } => {
                    "both poles must be visible to each LiDAR; try a larger extract.eps or smaller extract.min_points"
                }
                ExtractError::ParallelPoles { .. } => "place the two poles at different tilts",
                _ => "inspect the high-intensity points of the scan",
            },
            RunError::Calibration(CalibrationError::Solver(_)) => {
                "check the pole fits; raise solver.max_iterations if needed"
            }
            RunError::Calibration(CalibrationError::Disambiguation(_)) => {
                "scans need overlapping structure; raise icp.max_correspondence_distance"
            }
            RunError::Metrics(_) => "check the metrics section of the config",
        }
    }
}

/// Configuration hash that ignores where files live, so identical runs in
/// different directories share it.
fn portable_config_hash(cfg: &RunConfig) -> String {
    let mut c = cfg.clone();
    c.output_dir = PathBuf::new();
    for path in [&mut c.input.lidar1, &mut c.input.lidar2, &mut c.input.manifest].into_iter().flatten() {
        *path = PathBuf::from(file_name(path));
    }
    c.sha256_hex()
}

fn file_name(p: &Path) -> String {
    p.file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn ensure_dir(dir: &Path) -> Result<(), RunError> {
    std::fs::create_dir_all(dir).map_err(|e| IoError::file(dir, e).into())
}

fn input_paths(cfg: &RunConfig) -> [PathBuf; 2] {
    let default = |i: usize| cfg.output_dir.join(SCAN_FILES[i]);
    [
        cfg.input.lidar1.clone().unwrap_or_else(|| default(0)),
        cfg.input.lidar2.clone().unwrap_or_else(|| default(1)),
    ]
}

fn manifest_path(cfg: &RunConfig) -> PathBuf {
    cfg.input
        .manifest
        .clone()
        .unwrap_or_else(|| cfg.output_dir.join(MANIFEST_FILE))
}

fn load_scans(cfg: &RunConfig) -> Result<([PointCloud; 2], [String; 2]), RunError> {
    let paths = input_paths(cfg);
    let scans = [read_cloud(&paths[0])?, read_cloud(&paths[1])?];
    Ok((scans, paths.map(|p| file_name(&p))))
}

/// Scenario described by the config: the seeded random scene at the
/// configured noise level.
pub fn scenario_for(cfg: &RunConfig) -> Scenario {
    let mut s = random_scenario(cfg.seed);
    s.lidar.noise_sigma = cfg.scenario.sigma;
    s.environment = cfg.scenario.environment;
    s
}

/// Writes both scans and the manifest.
pub fn cmd_simulate(cfg: &RunConfig) -> Result<Manifest, RunError> {
    cfg.validate()?;
    let scenario = scenario_for(cfg);
    scenario.validate()?;
    ensure_dir(&cfg.output_dir)?;
    for (i, name) in SCAN_FILES.iter().enumerate() {
        write_cloud(&generate_scan(&scenario, i)?, &cfg.output_dir.join(name))?;
    }
    let manifest = Manifest::from_scenario(&scenario, SCAN_FILES.map(String::from));
    manifest.save(&cfg.output_dir.join(MANIFEST_FILE))?;
    Ok(manifest)
}

fn pole_records(poles: &[[FittedPole; 2]; 2]) -> Vec<PoleFitRecord> {
    let mut out = Vec::new();
    for (lidar, pair) in poles.iter().enumerate() {
        for (pole, p) in pair.iter().enumerate() {
            out.push(PoleFitRecord {
                lidar,
                pole,
                anchor: (*p.line.anchor()).into(),
                direction: (*p.line.direction()).into(),
                inlier_count: p.inlier_count,
                rms_residual: p.rms_residual,
                z_span: p.z_span,
            });
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoleFile {
    pub seed: u64,
    pub inputs: [String; 2],
    pub poles: Vec<PoleFitRecord>,
}

fn extract_both(cfg: &RunConfig, scans: &[PointCloud; 2]) -> Result<[[FittedPole; 2]; 2], RunError> {
    let params = cfg.calibration_params()?;
    let one = |lidar: usize| {
        extract_poles(&scans[lidar], &params.extract)
            .map_err(|source| RunError::from(CalibrationError::Extract { lidar, source }))
    };
    Ok([one(0)?, one(1)?])
}

/// Writes the fitted poles of both scans.
pub fn cmd_extract(cfg: &RunConfig) -> Result<PoleFile, RunError> {
    cfg.validate()?;
    let (scans, inputs) = load_scans(cfg)?;
    let poles = extract_both(cfg, &scans)?;
    let file = PoleFile {
        seed: cfg.seed,
        inputs,
        poles: pole_records(&poles),
    };
    ensure_dir(&cfg.output_dir)?;
    let text = toml::to_string(&file).expect("pole records are TOML-representable");
    std::fs::write(cfg.output_dir.join(POLES_FILE), text)
        .map_err(|e| IoError::file(&cfg.output_dir.join(POLES_FILE), e))?;
    Ok(file)
}

fn label(index: usize) -> String {
    ((b'a' + index as u8) as char).to_string()
}

/// Report for a finished calibration, without metrics.
pub fn build_report(cfg: &RunConfig, calib: &Calibration, inputs: [String; 2]) -> RunReport {
    let hypotheses = enumerate_hypotheses();
    let candidates = calib
        .candidates
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let base = CandidateRecord {
                index: i,
                label: label(i),
                hypothesis: hypotheses[i].to_string(),
                status: "ok".into(),
                error: None,
                final_cost: None,
                converged: None,
                iterations: None,
                e_r: None,
                e_t: None,
                icp_converged: None,
                extrinsic: None,
            };
            match c {
                Ok(c) => {
                    let s = &calib.scores[i];
                    let finite = s.e_r.is_finite() && s.e_t.is_finite();
                    CandidateRecord {
                        final_cost: Some(c.final_cost),
                        converged: Some(c.converged),
                        iterations: Some(c.iterations),
                        e_r: finite.then_some(s.e_r),
                        e_t: finite.then_some(s.e_t),
                        icp_converged: finite.then_some(s.icp_converged),
                        extrinsic: Some(PoseRecord::from_transform(&c.transform)),
                        ..base
                    }
                }
                Err(e) => CandidateRecord {
                    status: "failed".into(),
                    error: Some(e.to_string()),
                    ..base
                },
            }
        })
        .collect();
    RunReport {
        provenance: Provenance {
            tool: TOOL_NAME.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            seed: cfg.seed,
            config_sha256: portable_config_hash(cfg),
            inputs,
        },
        selected: SelectedRecord {
            index: calib.selected,
            label: label(calib.selected),
            hypothesis: hypotheses[calib.selected].to_string(),
            extrinsic: PoseRecord::from_transform(&calib.transform()),
        },
        candidates,
        poles: pole_records(&calib.poles),
        metrics: None,
    }
}

fn save_report(cfg: &RunConfig, report: &RunReport) -> Result<(), RunError> {
    ensure_dir(&cfg.output_dir)?;
    report.save(&cfg.output_dir.join(REPORT_FILE))?;
    let tsv_path = cfg.output_dir.join(CANDIDATES_FILE);
    std::fs::write(&tsv_path, candidates_tsv(report)).map_err(|e| IoError::file(&tsv_path, e))?;
    Ok(())
}

/// Calibrates the input scans and writes the report and candidate table.
pub fn cmd_calibrate(cfg: &RunConfig) -> Result<RunReport, RunError> {
    cfg.validate()?;
    let (scans, inputs) = load_scans(cfg)?;
    let calib = calibrate(&scans[0], &scans[1], &cfg.calibration_params()?)?;
    let report = build_report(cfg, &calib, inputs);
    save_report(cfg, &report)?;
    Ok(report)
}

fn metrics_for(
    cfg: &RunConfig,
    extrinsic: &RigidTransform,
    poles: &[[FittedPole; 2]; 2],
    scans: &[PointCloud; 2],
    manifest: &Manifest,
) -> Result<MetricsRecord, RunError> {
    let truth = manifest.ground_truth.to_transform()?;
    let scenario = manifest.to_scenario()?;
    let integrand = cfg.integrand()?;
    let lines = |l: usize| -> [Line3; 2] { [poles[l][0].line, poles[l][1].line] };
    let (e_r, e_t) = extrinsic.difference(&truth);
    let mut axis_fit = Vec::new();
    for (lidar, pair) in poles.iter().enumerate() {
        for p in pair {
            let (pole, error) = pole_axis_fit_error(&scenario, lidar, p, integrand)?;
            axis_fit.push(AxisFitRecord {
                lidar,
                pole,
                integrand: integrand.to_string(),
                error,
            });
        }
    }
    Ok(MetricsRecord {
        e_rt: Some(extrinsic_error_e_rt(extrinsic, &truth)),
        e_r_truth: Some(e_r),
        e_t_truth: Some(e_t),
        truth_candidate: Some(hypothesis_for_transform(&truth, &lines(0), &lines(1)).index()),
        rqe: rqe_of_extrinsic(&scans[0], &scans[1], extrinsic, &cfg.rqe())?,
        axis_fit,
    })
}

/// Adds metrics against the manifest's ground truth to an existing report.
pub fn cmd_evaluate(cfg: &RunConfig) -> Result<RunReport, RunError> {
    cfg.validate()?;
    let mut report = RunReport::load(&cfg.output_dir.join(REPORT_FILE))?;
    let manifest = Manifest::load(&manifest_path(cfg))?;
    let (scans, _) = load_scans(cfg)?;
    let poles = extract_both(cfg, &scans)?;
    let extrinsic = report.selected.extrinsic.to_transform()?;
    report.metrics = Some(metrics_for(cfg, &extrinsic, &poles, &scans, &manifest)?);
    save_report(cfg, &report)?;
    Ok(report)
}

/// simulate → calibrate → evaluate on the configured seed.
pub fn cmd_pipeline(cfg: &RunConfig) -> Result<RunReport, RunError> {
    if cfg.input.lidar1.is_some() || cfg.input.lidar2.is_some() {
        return Err(RunError::Usage(
            "pipeline simulates its own scans; use calibrate for input.lidar1/lidar2".into(),
        ));
    }
    cmd_simulate(cfg)?;
    cmd_calibrate(cfg)?;
    cmd_evaluate(cfg)
}

/// Seeds `seed..seed + trials` at the configured noise, written as a table.
/// Returns the trials and their mean `e_rt`.
pub fn cmd_trials(cfg: &RunConfig, trials: u64) -> Result<(Vec<Trial>, f64), RunError> {
    cfg.validate()?;
    if trials == 0 {
        return Err(RunError::Usage("--trials must be at least 1".into()));
    }
    let params = cfg.calibration_params()?;
    let results = noise_trials(cfg.seed..cfg.seed + trials, cfg.scenario.sigma, &params);
    let trials = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    let mean = trials.iter().map(|t| t.e_rt).sum::<f64>() / trials.len() as f64;
    ensure_dir(&cfg.output_dir)?;
    let path = cfg.output_dir.join(TRIALS_FILE);
    std::fs::write(&path, trials_tsv(&trials)).map_err(|e| IoError::file(&path, e))?;
    Ok((trials, mean))
}

/// Writes the axis-fit study table.
pub fn cmd_sweep(cfg: &RunConfig) -> Result<String, RunError> {
    let tsv = axis_fit_sweep_tsv(&axis_fit_sweep()?);
    ensure_dir(&cfg.output_dir)?;
    let path = cfg.output_dir.join(SWEEP_FILE);
    std::fs::write(&path, &tsv).map_err(|e| IoError::file(&path, e))?;
    Ok(tsv)
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use polecal::io::{RunConfig, CONFIG_ENV};
use polecal::run::{
    cmd_calibrate, cmd_evaluate, cmd_extract, cmd_pipeline, cmd_simulate, cmd_sweep, cmd_trials,
    RunError, REPORT_FILE,
};

/// Extrinsic calibration of two LiDARs from two retro-reflective poles.
#[derive(Parser)]
#[command(name = "polecal", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// TOML run configuration.
    #[arg(long, global = true, env = CONFIG_ENV)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Per-coordinate noise of simulated scans, meters.
    #[arg(long, global = true)]
    sigma: Option<f64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Axis-fit integrand: sum or product.
    #[arg(long, global = true)]
    integrand: Option<String>,
    /// LiDAR-1 scan (.pcd or .csv); defaults to the output directory's.
    #[arg(long, global = true)]
    lidar1: Option<PathBuf>,
    #[arg(long, global = true)]
    lidar2: Option<PathBuf>,
    /// Simulation manifest with the ground truth.
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a seeded two-pole scene; writes both scans and a manifest.
    Simulate,
    /// Fit the two poles in each scan.
    Extract,
    /// Calibrate LiDAR-2 against LiDAR-1; writes the report and candidate table.
    Calibrate,
    /// Add metrics against a manifest's ground truth to the report.
    Evaluate,
    /// Simulate, calibrate and evaluate. With --trials N, also calibrate
    /// seeds seed..seed+N and print the mean e_rt.
    Pipeline {
        #[arg(long)]
        trials: Option<u64>,
    },
    /// Axis-fit error over sensor distance, pole radius and orientation.
    Sweep,
}

fn load_config(c: &Common) -> Result<RunConfig, RunError> {
    let mut cfg = match &c.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if let Some(s) = c.sigma {
        cfg.scenario.sigma = s;
    }
    if let Some(o) = &c.out {
        cfg.output_dir = o.clone();
    }
    if let Some(i) = &c.integrand {
        cfg.metrics.integrand = i.clone();
    }
    if let Some(p) = &c.lidar1 {
        cfg.input.lidar1 = Some(p.clone());
    }
    if let Some(p) = &c.lidar2 {
        cfg.input.lidar2 = Some(p.clone());
    }
    if let Some(p) = &c.manifest {
        cfg.input.manifest = Some(p.clone());
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), RunError> {
    let cfg = load_config(&cli.common)?;
    let report_path = cfg.output_dir.join(REPORT_FILE);
    match cli.command {
        Command::Simulate => {
            let m = cmd_simulate(&cfg)?;
            println!("seed {} sigma {}: scans and manifest in {}", m.seed, m.sigma, cfg.output_dir.display());
        }
        Command::Extract => {
            let f = cmd_extract(&cfg)?;
            for p in &f.poles {
                println!(
                    "lidar {} pole {}: {} points, rms {:.4} m, direction {:?}",
                    p.lidar + 1,
                    p.pole,
                    p.inlier_count,
                    p.rms_residual,
                    p.direction
                );
            }
        }
        Command::Calibrate => {
            let r = cmd_calibrate(&cfg)?;
            println!("selected {} ({})", r.selected.label, r.selected.hypothesis);
            println!("quaternion {:?}", r.selected.extrinsic.quaternion);
            println!("translation {:?}", r.selected.extrinsic.translation);
            println!("report: {}", report_path.display());
        }
        Command::Evaluate => print_metrics(&cmd_evaluate(&cfg)?),
        Command::Pipeline { trials } => {
            let r = cmd_pipeline(&cfg)?;
            println!("selected {} ({})", r.selected.label, r.selected.hypothesis);
            print_metrics(&r);
            println!("report: {}", report_path.display());
            if let Some(n) = trials {
                let (trials, mean) = cmd_trials(&cfg, n)?;
                let hits = trials.iter().filter(|t| t.selected_truth).count();
                println!(
                    "{} trials at sigma {}: mean e_rt {mean:.4} m, ground-truth hypothesis selected {hits}/{}",
                    trials.len(),
                    cfg.scenario.sigma,
                    trials.len()
                );
            }
        }
        Command::Sweep => print!("{}", cmd_sweep(&cfg)?),
    }
    Ok(())
}

fn print_metrics(r: &polecal::io::RunReport) {
    let Some(m) = &r.metrics else { return };
    if let (Some(e), Some(a), Some(d)) = (m.e_rt, m.e_r_truth, m.e_t_truth) {
        println!("e_rt {e:.6} m, rotation error {a:.3e} rad, translation error {d:.3e} m");
    }
    println!("rqe {:.6}", m.rqe);
    for a in &m.axis_fit {
        println!("axis fit lidar {} pole {} ({}): {:.6e}", a.lidar + 1, a.pole, a.integrand, a.error);
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.module());
            eprintln!("hint: {}", e.hint());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

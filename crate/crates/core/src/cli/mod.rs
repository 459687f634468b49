//! Command-line front end for the `sse` binary.

pub mod config;
pub mod svg;

use std::fs;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::analysis::{run_study, ExperimentConfig, ProblemKind, Study};
use crate::diagnostics::{self, CheckResult, DiagnosticsOptions};
use crate::error::Error;
use crate::fem1d::{assemble, Mesh, Rotation};
use crate::noise::{sample_path, NoiseSpec};
use crate::schemes::{self, ModelProblem};
use config::ConfigFile;

#[derive(Debug, Parser)]
#[command(name = "sse", version, about = "Strong convergence experiments for a stochastic Schrödinger system")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone)]
pub struct Common {
    /// Run configuration (TOML).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; results do not depend on this.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Print a machine-readable report on stdout.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Strong error against a fine-mesh reference as h varies.
    SpatialRate(Common),
    /// Strong error against a fine-step reference as k varies.
    TemporalRate(Common),
    /// Runs the property battery.
    Diagnostics {
        #[command(flatten)]
        common: Common,
        #[arg(long, hide = true)]
        inject_fault: bool,
    },
    /// Simulates one trajectory and writes nodal snapshots.
    SinglePath {
        #[command(flatten)]
        common: Common,
        /// Also write the sampled Brownian increments to this file.
        #[arg(long)]
        dump: Option<PathBuf>,
    },
}

/// Exit status and message of a failed command.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Compute(String),
}

impl Failure {
    pub fn code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Compute(_) => 1,
        }
    }
}

fn usage(e: Error) -> Failure {
    Failure::Usage(e.to_string())
}

fn compute(e: Error) -> Failure {
    match e {
        Error::Config(m) => Failure::Usage(m),
        other => Failure::Compute(other.to_string()),
    }
}

fn io_fail(path: &Path, e: std::io::Error) -> Failure {
    Failure::Compute(format!("cannot write {}: {e}", path.display()))
}

#[derive(Debug, Serialize)]
struct RunManifest<'a, C: Serialize> {
    command: &'a str,
    artifact_version: &'a str,
    config: &'a C,
    started: DateTime<Utc>,
    finished: DateTime<Utc>,
    outputs: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    slope: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    slope_ci: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    predicted_slope: Option<f64>,
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    fs::write(path, bytes).map_err(|e| io_fail(path, e))
}

fn load_config(common: &Common) -> Result<ConfigFile, Failure> {
    let path = common.config.as_ref().ok_or_else(|| Failure::Usage("--config is required".into()))?;
    let mut cfg = ConfigFile::load(path).map_err(usage)?;
    if let Some(seed) = common.seed {
        cfg.seed = Some(seed);
    }
    Ok(cfg)
}

fn prepare_out(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure::Usage(format!("cannot create {}: {e}", dir.display())))
}

fn rate_command(common: &Common, study: Study) -> Result<(), Failure> {
    let started = Utc::now();
    let cfg: ExperimentConfig = load_config(common)?.experiment(study).map_err(usage)?;
    prepare_out(&common.out)?;
    let table = run_study(&cfg).map_err(compute)?;
    let (stem, x_label, name) = match study {
        Study::Spatial => ("spatial", "mesh width h", "spatial-rate"),
        Study::Temporal => ("temporal", "time step k", "temporal-rate"),
    };
    let csv_path = common.out.join(format!("{stem}.csv"));
    let svg_path = common.out.join(format!("{stem}.svg"));
    let manifest_path = common.out.join("manifest.json");
    let mut csv = Vec::new();
    table.write_csv(&mut csv).map_err(|e| io_fail(&csv_path, e))?;
    write_file(&csv_path, &csv)?;
    let predicted = cfg.predicted_slope();
    write_file(&svg_path, svg::render(&table, predicted, x_label).as_bytes())?;
    let manifest = RunManifest {
        command: name,
        artifact_version: env!("CARGO_PKG_VERSION"),
        config: &cfg,
        started,
        finished: Utc::now(),
        outputs: [&csv_path, &svg_path].iter().map(|p| p.display().to_string()).collect(),
        slope: Some(table.slope),
        slope_ci: Some(table.slope_ci),
        predicted_slope: Some(predicted),
    };
    let manifest_json = serde_json::to_string_pretty(&manifest).map_err(|e| Failure::Compute(e.to_string()))?;
    write_file(&manifest_path, manifest_json.as_bytes())?;

    if common.json {
        println!("{}", serde_json::to_string_pretty(&table).map_err(|e| Failure::Compute(e.to_string()))?);
    } else {
        println!("{:>12} {:>12} {:>12} {:>12} {:>12} {:>8}", "level", "rms_re", "rms_im", "rms", "stderr", "samples");
        for r in &table.rows {
            println!(
                "{:>12.6e} {:>12.4e} {:>12.4e} {:>12.4e} {:>12.2e} {:>8}",
                r.level, r.rms_re, r.rms_im, r.rms, r.stderr, r.n_samples
            );
        }
        println!(
            "slope {:.3} ± {:.3} (real {:.3}, imaginary {:.3}); predicted {}",
            table.slope, table.slope_ci, table.slope_re, table.slope_im, predicted
        );
        if table.excluded > 0 {
            println!("{} samples excluded after blowup", table.excluded);
        }
    }
    Ok(())
}

fn diagnostics_command(common: &Common, inject_fault: bool) -> Result<(), Failure> {
    let opts = DiagnosticsOptions {
        seed: common.seed.unwrap_or(1),
        rotation: if inject_fault { Rotation::FlippedSign } else { Rotation::Exact },
    };
    let checks: Vec<CheckResult> = diagnostics::run_all(opts).map_err(compute)?;
    if common.json {
        println!("{}", serde_json::to_string_pretty(&checks).map_err(|e| Failure::Compute(e.to_string()))?);
    } else {
        println!("{:<28} {:>6} {:>14} {:>14}  detail", "check", "result", "measured", "threshold");
        for c in &checks {
            println!(
                "{:<28} {:>6} {:>14.6e} {:>14.6e}  {}",
                c.name,
                if c.passed { "PASS" } else { "FAIL" },
                c.measured,
                c.threshold,
                c.detail
            );
        }
    }
    let failed: Vec<&str> = checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Compute(format!("failed checks: {}", failed.join(", "))))
    }
}

#[derive(Debug, Serialize)]
struct SinglePathConfig {
    h: f64,
    k: f64,
    s: f64,
    num_modes: usize,
    final_time: f64,
    problem: ProblemKind,
    seed: u64,
    noise_intensity: f64,
    snapshots: Vec<f64>,
}

fn dyadic_steps(v: f64, key: &str) -> Result<usize, Failure> {
    let n = 1.0 / v;
    if !(v > 0.0 && v <= 0.5) || (n.log2() - n.log2().round()).abs() > 1e-9 {
        return Err(Failure::Usage(format!("{key} = {v} must be a dyadic value 2^-m with m >= 1")));
    }
    Ok(n.round() as usize)
}

fn single_path_command(common: &Common, dump: Option<&Path>) -> Result<(), Failure> {
    let started = Utc::now();
    let cfg = load_config(common)?;
    let req = |v: Option<f64>, key: &str| v.ok_or_else(|| Failure::Usage(format!("missing key `{key}`")));
    let h = req(cfg.fixed_h, "fixed_h")?;
    let k = req(cfg.fixed_k, "fixed_k")?;
    let s = req(cfg.s, "s")?;
    let final_time = cfg.final_time.unwrap_or(1.0);
    let num_modes = cfg.num_modes.ok_or_else(|| Failure::Usage("missing key `J`".into()))?;
    let n_cells = dyadic_steps(h, "fixed_h")?;
    if let Some(theta) = cfg.theta {
        if !(s > theta + 0.5) {
            return Err(Failure::Usage(format!(
                "finiteness criterion violated: need theta < s - 1/2, got theta = {theta}, s = {s}"
            )));
        }
    }
    if !(final_time > 0.0) {
        return Err(Failure::Usage(format!("T = {final_time} must be positive")));
    }
    let steps = final_time / k;
    if !(k > 0.0) || (steps - steps.round()).abs() > 1e-9 * steps.max(1.0) || steps.round() < 1.0 {
        return Err(Failure::Usage(format!("T = {final_time} is not an integer multiple of k = {k}")));
    }
    let n_steps = steps.round() as usize;
    let snapshots = cfg.snapshots.clone().unwrap_or_else(|| vec![final_time]);
    if let Some(bad) = snapshots.iter().find(|t| !(**t >= 0.0 && **t <= final_time)) {
        return Err(Failure::Usage(format!("snapshot time {bad} lies outside [0, {final_time}]")));
    }
    let intensity = cfg.noise_intensity.unwrap_or(1.0);
    if !(intensity >= 0.0) {
        return Err(Failure::Usage(format!("noise_intensity = {intensity} must be nonnegative")));
    }
    let noise = NoiseSpec::new(s, num_modes)
        .map_err(usage)?
        .with_correlation(cfg.correlated_noise.unwrap_or(false))
        .with_intensity(intensity);
    let problem = match cfg.problem.unwrap_or_default() {
        ProblemKind::Linear => ModelProblem::linear(noise.clone(), final_time),
        ProblemKind::Semilinear => ModelProblem::paper(noise.clone(), final_time),
    }
    .map_err(usage)?
    .with_ordering(cfg.operator_ordering.unwrap_or_default());
    let seed = cfg.seed.unwrap_or(0);
    prepare_out(&common.out)?;

    let system = assemble(&Mesh::new(n_cells).map_err(usage)?).map_err(compute)?;
    let path = sample_path(&noise, final_time, n_steps, seed, 0).map_err(compute)?;
    let mut outputs = Vec::new();
    if let Some(dump_path) = dump {
        let file = fs::File::create(dump_path).map_err(|e| io_fail(dump_path, e))?;
        let mut w = std::io::BufWriter::new(file);
        path.write_dump(&mut w).map_err(compute)?;
        std::io::Write::flush(&mut w).map_err(|e| io_fail(dump_path, e))?;
        outputs.push(dump_path.display().to_string());
    }
    let wanted: Vec<usize> = snapshots.iter().map(|t| ((t / k).round() as usize).min(n_steps)).collect();
    let mut captured = std::collections::BTreeMap::new();
    schemes::run_with(&problem, &system, &path, |st| {
        if wanted.contains(&st.step_index) {
            captured.insert(st.step_index, st.pair.clone());
        }
    })
    .map_err(compute)?;

    let mut csv = String::from("t,x,u1,u2\n");
    for &step in &wanted {
        let pair = &captured[&step];
        let t = step as f64 * k;
        for i in 0..pair.len() {
            let x = system.mesh().node(i);
            csv.push_str(&format!("{t},{x},{},{}\n", pair.re.nodal_values[i], pair.im.nodal_values[i]));
        }
    }
    let csv_path = common.out.join("single_path.csv");
    write_file(&csv_path, csv.as_bytes())?;
    outputs.insert(0, csv_path.display().to_string());

    let record = SinglePathConfig {
        h,
        k,
        s,
        num_modes,
        final_time,
        problem: cfg.problem.unwrap_or_default(),
        seed,
        noise_intensity: intensity,
        snapshots: wanted.iter().map(|&n| n as f64 * k).collect(),
    };
    let manifest = RunManifest {
        command: "single-path",
        artifact_version: env!("CARGO_PKG_VERSION"),
        config: &record,
        started,
        finished: Utc::now(),
        outputs,
        slope: None,
        slope_ci: None,
        predicted_slope: None,
    };
    let json = serde_json::to_string_pretty(&manifest).map_err(|e| Failure::Compute(e.to_string()))?;
    write_file(&common.out.join("manifest.json"), json.as_bytes())?;
    if common.json {
        println!("{json}");
    } else {
        println!("wrote {} snapshots of {} nodes to {}", wanted.len(), n_cells - 1, csv_path.display());
    }
    Ok(())
}

fn dispatch(cli: &Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::SpatialRate(c) => rate_command(c, Study::Spatial),
        Command::TemporalRate(c) => rate_command(c, Study::Temporal),
        Command::Diagnostics { common, inject_fault } => diagnostics_command(common, *inject_fault),
        Command::SinglePath { common, dump } => single_path_command(common, dump.as_deref()),
    }
}

fn threads(cli: &Cli) -> Option<usize> {
    match &cli.command {
        Command::SpatialRate(c) | Command::TemporalRate(c) => c.threads,
        Command::Diagnostics { common, .. } | Command::SinglePath { common, .. } => common.threads,
    }
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn main() -> i32 {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let result = match threads(&cli) {
        Some(0) => Err(Failure::Usage("--threads must be at least 1".into())),
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| dispatch(&cli)),
            Err(e) => Err(Failure::Compute(e.to_string())),
        },
        None => dispatch(&cli),
    };
    match result {
        Ok(()) => 0,
        Err(f) => {
            match &f {
                Failure::Usage(m) => eprintln!("error: {m}"),
                Failure::Compute(m) => eprintln!("failed: {m}"),
            }
            f.code()
        }
    }
}

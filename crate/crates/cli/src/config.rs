//! Flag parsing and config-file merging. Every flag can also be set through
//! a JSON config file (`--config run.json`); explicit flags win.

use std::path::PathBuf;

use clap::Parser;
use serde::Deserialize;
use shakegrid::engine::SimulationConfig;
use shakegrid::grid::RegionBox;
use shakegrid::xbb::ConnectivityMode;

use crate::AppFailure;

#[derive(Debug, Parser)]
#[command(
    name = "shakegrid",
    about = "Seismic-resilience Monte Carlo simulator for bus-branch grid models",
    version
)]
pub struct Cli {
    /// Bus-branch case file (JSON).
    #[arg(long)]
    pub case: Option<PathBuf>,
    /// ESRI ASCII grid of ln(mean PGA) in g.
    #[arg(long)]
    pub shakemap_mean: Option<PathBuf>,
    /// ESRI ASCII grid of ln-sigma of PGA.
    #[arg(long)]
    pub shakemap_sigma: Option<PathBuf>,
    /// Fragility/restoration curve table (JSON). Omit to use built-in
    /// placeholder defaults.
    #[arg(long)]
    pub curves: Option<PathBuf>,
    /// Monte Carlo iteration count.
    #[arg(long)]
    pub iterations: Option<u32>,
    /// Recovery horizon in days.
    #[arg(long)]
    pub days: Option<u32>,
    /// Master seed; a run is a pure function of inputs and this value.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads (0 = automatic).
    #[arg(long)]
    pub threads: Option<usize>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Region box: min_lat max_lat min_lon max_lon.
    #[arg(long, num_args = 4, value_names = ["MIN_LAT", "MAX_LAT", "MIN_LON", "MAX_LON"])]
    pub region: Option<Vec<f64>>,
    /// Substation connectivity rule: degree | component.
    #[arg(long)]
    pub connectivity_mode: Option<String>,
    /// Fraction of pre-event load counted as recovered.
    #[arg(long)]
    pub recovery_threshold: Option<f64>,
    /// Power-flow mismatch tolerance (pu).
    #[arg(long)]
    pub pf_tol: Option<f64>,
    /// Power-flow iteration cap.
    #[arg(long)]
    pub pf_max_iter: Option<u32>,
    /// Also write the full per-iteration day logs (large at full scale).
    #[arg(long)]
    pub emit_daylogs: bool,
    /// Also write the substation graph topology dump.
    #[arg(long)]
    pub dump_xbb: bool,
    /// Also write per-day largest-island solutions for one iteration.
    #[arg(long)]
    pub debug_pf_iteration: Option<u32>,
    /// JSON file holding any of the above settings.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// JSON mirror of the flags.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub case: Option<PathBuf>,
    pub shakemap_mean: Option<PathBuf>,
    pub shakemap_sigma: Option<PathBuf>,
    pub curves: Option<PathBuf>,
    pub iterations: Option<u32>,
    pub days: Option<u32>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
    pub region: Option<[f64; 4]>,
    pub connectivity_mode: Option<String>,
    pub recovery_threshold: Option<f64>,
    pub pf_tol: Option<f64>,
    pub pf_max_iter: Option<u32>,
    pub emit_daylogs: Option<bool>,
    pub dump_xbb: Option<bool>,
    pub debug_pf_iteration: Option<u32>,
}

/// Everything resolved and validated, ready to run.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub case_path: PathBuf,
    pub mean_path: PathBuf,
    pub sigma_path: PathBuf,
    pub curves_path: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub sim: SimulationConfig,
    pub emit_daylogs: bool,
    pub dump_xbb: bool,
    pub debug_pf_iteration: Option<u32>,
}

fn input_err(msg: impl Into<String>) -> AppFailure {
    AppFailure::input("SG_INPUT_CONFIG", msg)
}

pub fn resolve(cli: Cli) -> Result<Resolved, AppFailure> {
    let file: FileConfig = match &cli.config {
        None => FileConfig::default(),
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| input_err(format!("cannot read config {}: {e}", path.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| input_err(format!("bad config {}: {e}", path.display())))?
        }
    };

    let case_path = cli
        .case
        .or(file.case)
        .ok_or_else(|| input_err("missing required input: --case"))?;
    let mean_path = cli
        .shakemap_mean
        .or(file.shakemap_mean)
        .ok_or_else(|| input_err("missing required input: --shakemap-mean"))?;
    let sigma_path = cli
        .shakemap_sigma
        .or(file.shakemap_sigma)
        .ok_or_else(|| input_err("missing required input: --shakemap-sigma"))?;
    let out_dir = cli
        .out
        .or(file.out)
        .ok_or_else(|| input_err("missing required output directory: --out"))?;
    let curves_path = cli.curves.or(file.curves);

    let defaults = SimulationConfig::default();
    let region = match cli.region.as_deref() {
        Some([a, b, c, d]) => Some([*a, *b, *c, *d]),
        Some(other) => {
            return Err(input_err(format!(
                "--region needs exactly 4 values, got {}",
                other.len()
            )))
        }
        None => file.region,
    };
    let region = match region {
        None => defaults.region,
        Some([min_lat, max_lat, min_lon, max_lon]) => {
            RegionBox::new(min_lat, max_lat, min_lon, max_lon)
                .map_err(|e| input_err(e.to_string()))?
        }
    };

    let connectivity_mode = match cli.connectivity_mode.or(file.connectivity_mode).as_deref() {
        None => defaults.connectivity_mode,
        Some("degree") => ConnectivityMode::Degree,
        Some("component") => ConnectivityMode::Component,
        Some(other) => {
            return Err(input_err(format!(
                "--connectivity-mode must be `degree` or `component`, got `{other}`"
            )))
        }
    };

    let sim = SimulationConfig {
        iterations: cli
            .iterations
            .or(file.iterations)
            .unwrap_or(defaults.iterations),
        horizon_days: cli.days.or(file.days).unwrap_or(defaults.horizon_days),
        master_seed: cli.seed.or(file.seed).unwrap_or(defaults.master_seed),
        recovery_threshold: cli
            .recovery_threshold
            .or(file.recovery_threshold)
            .unwrap_or(defaults.recovery_threshold),
        region,
        connectivity_mode,
        pf_tolerance_pu: cli
            .pf_tol
            .or(file.pf_tol)
            .unwrap_or(defaults.pf_tolerance_pu),
        pf_max_iterations: cli
            .pf_max_iter
            .or(file.pf_max_iter)
            .unwrap_or(defaults.pf_max_iterations),
        thread_count: cli
            .threads
            .or(file.threads)
            .unwrap_or(defaults.thread_count),
    };

    if sim.iterations == 0 {
        return Err(input_err("--iterations must be ≥ 1"));
    }
    if sim.horizon_days == 0 {
        return Err(input_err("--days must be ≥ 1"));
    }
    if !(sim.recovery_threshold > 0.0 && sim.recovery_threshold <= 1.0) {
        return Err(input_err(format!(
            "--recovery-threshold must be in (0, 1], got {}",
            sim.recovery_threshold
        )));
    }

    Ok(Resolved {
        case_path,
        mean_path,
        sigma_path,
        curves_path,
        out_dir,
        sim,
        emit_daylogs: cli.emit_daylogs || file.emit_daylogs.unwrap_or(false),
        dump_xbb: cli.dump_xbb || file.dump_xbb.unwrap_or(false),
        debug_pf_iteration: cli.debug_pf_iteration.or(file.debug_pf_iteration),
    })
}

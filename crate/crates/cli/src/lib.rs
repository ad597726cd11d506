//! Command-line front end for the radar simulator.
//!
//! Each subcommand writes, into `--out`:
//! `<cmd>.csv` (table), `<cmd>.json` (full result), `<cmd>.config.toml`
//! (effective configuration) and `<cmd>.meta.json` (timestamps and timing).
//! Only the metadata sidecar changes between reruns with the same inputs.

pub mod commands;
pub mod config;
pub mod output;

use std::path::PathBuf;

use chrono::Utc;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use dradar::doa::Algorithm;

use commands::{DegenerateAbort, AF_COLUMNS, CHIRP_SPECTRUM_COLUMNS, CHIRP_TARGET_COLUMNS, DOA_COLUMNS, LINK_COLUMNS, POWER_COLUMNS};
use config::{ArraySize, ConfigError, Overrides, RunConfig};
use output::OutputDir;

#[derive(Debug, Parser)]
#[command(name = "dradar", version, about = "2D MIMO FMCW radar array simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Monte Carlo DOA RMSE over SNR x distance x array x algorithm
    DoaSweep,
    /// Required TX power per element over SNR x distance, with walls
    LinkBudget,
    /// TX / RX / LO DC power versus array size
    PowerBudget,
    /// Dense |AF| grids
    ArrayFactor,
    /// Chirp, echo, dechirp and range estimation round trip
    ChirpDemo,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::DoaSweep => "doa-sweep",
            Command::LinkBudget => "link-budget",
            Command::PowerBudget => "power-budget",
            Command::ArrayFactor => "array-factor",
            Command::ChirpDemo => "chirp-demo",
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// TOML configuration file
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Master seed
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,
    /// Monte Carlo runs per cell
    #[arg(long, global = true, value_name = "M")]
    pub runs: Option<usize>,
    /// Output directory
    #[arg(long, global = true, value_name = "DIR", default_value = "out")]
    pub out: PathBuf,
    /// Array size, e.g. 8x8
    #[arg(long, global = true, value_name = "NxM")]
    pub array: Option<ArraySize>,
    /// DOA algorithm
    #[arg(long, global = true, value_name = "music|mvdr")]
    pub algo: Option<Algorithm>,
    /// Wall material name
    #[arg(long, global = true, value_name = "NAME")]
    pub material: Option<String>,
    /// Distance scaling exponent in [0, 4]
    #[arg(long = "p-exponent", global = true, value_name = "P")]
    pub p_exponent: Option<f64>,
    /// Worker threads (default: all cores)
    #[arg(long, global = true, value_name = "N")]
    pub threads: Option<usize>,
}

impl CommonArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            runs: self.runs,
            array: self.array,
            algorithm: self.algo,
            material: self.material.clone(),
            p_exponent: self.p_exponent,
        }
    }
}

/// Reads the config file (if any), applies flag overrides and validates.
pub fn effective_config(args: &CommonArgs) -> anyhow::Result<RunConfig> {
    let mut cfg = match &args.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    cfg.apply(&args.overrides());
    cfg.validate()?;
    Ok(cfg)
}

#[derive(Serialize)]
struct Report<'a, T: Serialize> {
    command: &'a str,
    seed: u64,
    result: T,
}

/// Runs one subcommand and returns the files it wrote.
pub fn run(cli: &Cli) -> anyhow::Result<Vec<String>> {
    let started = Utc::now();
    let cfg = effective_config(&cli.common)?;
    let cmd = cli.command.name();
    let mut out = OutputDir::create(&cli.common.out)?;
    let json = format!("{cmd}.json");
    let csv = format!("{cmd}.csv");
    match cli.command {
        Command::DoaSweep => {
            let (result, rows) = commands::doa_sweep(&cfg)?;
            out.write_csv(&csv, &rows, &DOA_COLUMNS)?;
            out.write_json(&json, &Report { command: cmd, seed: cfg.seed, result: &result })?;
        }
        Command::LinkBudget => {
            let rows = commands::link_budget(&cfg)?;
            out.write_csv(&csv, &rows, &LINK_COLUMNS)?;
            out.write_json(&json, &Report { command: cmd, seed: cfg.seed, result: &rows })?;
        }
        Command::PowerBudget => {
            let rows = commands::power_budget(&cfg)?;
            out.write_csv(&csv, &rows, &POWER_COLUMNS)?;
            out.write_json(&json, &Report { command: cmd, seed: cfg.seed, result: &rows })?;
        }
        Command::ArrayFactor => {
            let maps = commands::array_factor(&cfg)?;
            for (summary, rows) in &maps {
                out.write_csv(&format!("{cmd}-{}.csv", summary.array), rows, &AF_COLUMNS)?;
            }
            let summaries: Vec<_> = maps.iter().map(|(s, _)| s).collect();
            out.write_json(&json, &Report { command: cmd, seed: cfg.seed, result: &summaries })?;
        }
        Command::ChirpDemo => {
            let rep = commands::chirp_demo(&cfg)?;
            out.write_csv(&csv, &rep.targets, &CHIRP_TARGET_COLUMNS)?;
            out.write_csv(&format!("{cmd}-spectrum.csv"), &rep.spectrum, &CHIRP_SPECTRUM_COLUMNS)?;
            out.write_json(&json, &Report { command: cmd, seed: cfg.seed, result: &rep })?;
        }
    }
    out.write_config(cmd, &cfg)?;
    out.write_metadata(cmd, started, cfg.seed)?;
    Ok(out.written().to_vec())
}

/// 2 for configuration problems, 3 for domain or numerical failures, 4 for a
/// degenerate-spectrum abort, 1 for anything else (I/O).
pub fn exit_code(err: &anyhow::Error) -> i32 {
    if err.downcast_ref::<ConfigError>().is_some() {
        return 2;
    }
    if err.downcast_ref::<DegenerateAbort>().is_some() {
        return 4;
    }
    match err.downcast_ref::<dradar::Error>() {
        Some(dradar::Error::Config(_) | dradar::Error::NotFound(_)) => 2,
        Some(dradar::Error::DegenerateSpectrum { .. }) => 4,
        Some(_) => 3,
        None => 1,
    }
}

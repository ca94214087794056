//! Batch experiment driver behind the `manet-sim` binary.
//!
//! Exit codes: 0 on success, 1 for an invalid configuration, 2 for I/O
//! failures.

use std::ffi::OsString;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;

use crate::engine;
use crate::metrics::{MetricsReport, SeriesRow};
use crate::model::{validate_config, Algorithm, ConfigErrors, SimConfig};

#[derive(Debug, Parser)]
#[command(name = "manet-sim", about = "MANET clustering simulator (LID, HD, WCA-lite, LIDAR)")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one configuration, once per seed.
    Run(RunArgs),
    /// Run algorithm x speed x seed and write per-cell means.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// JSON configuration file; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub nodes: Option<usize>,
    #[arg(long)]
    pub duration: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Comma-separated seed list.
    #[arg(long, value_delimiter = ',')]
    pub seeds: Vec<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub algorithm: Option<Algorithm>,
    #[arg(long)]
    pub speed_max: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Comma-separated algorithms (default: all four).
    #[arg(long, value_delimiter = ',')]
    pub algorithm: Vec<Algorithm>,
    /// Comma-separated maximum speeds in m/s (default: the config value).
    #[arg(long, value_delimiter = ',')]
    pub speed_max: Vec<f64>,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Invalid(#[from] ConfigErrors),
    #[error("cannot parse {path}: {source}")]
    Parse {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("{context}: {source}")]
    Io { context: String, source: io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invalid(_) | CliError::Parse { .. } => 1,
            CliError::Io { .. } => 2,
        }
    }

    fn io(context: impl Into<String>, source: io::Error) -> Self {
        CliError::Io {
            context: context.into(),
            source,
        }
    }
}

impl From<(PathBuf, csv::Error)> for CliError {
    fn from((path, e): (PathBuf, csv::Error)) -> Self {
        CliError::io(format!("writing {}", path.display()), io::Error::other(e))
    }
}

const DEFAULT_REPLICATIONS: u64 = 5;

/// Config file (or built-in defaults) with the common flag overrides applied.
pub fn load_config(common: &CommonArgs) -> Result<SimConfig, CliError> {
    let mut cfg = match &common.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::io(format!("reading {}", path.display()), e))?;
            SimConfig::from_json(&text).map_err(|source| CliError::Parse {
                path: path.clone(),
                source,
            })?
        }
        None => SimConfig::default(),
    };
    if let Some(n) = common.nodes {
        cfg.n_nodes = n;
    }
    if let Some(d) = common.duration {
        cfg.duration = d;
    }
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn prepare_out(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(format!("creating {}", dir.display()), e))
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::io(format!("writing {}", path.display()), e))
}

fn write_report(dir: &Path, stem: &str, report: &MetricsReport) -> Result<(), CliError> {
    write_file(&dir.join(format!("{stem}.json")), report.to_json().as_bytes())?;
    let csv_path = dir.join(format!("{stem}.csv"));
    let mut buf = Vec::new();
    report.write_csv(&mut buf).map_err(|e| (csv_path.clone(), e))?;
    write_file(&csv_path, &buf)
}

/// `run`: one report per seed, written as `run_<seed>.json` / `.csv`.
pub fn cmd_run(args: &RunArgs) -> Result<Vec<MetricsReport>, CliError> {
    let mut cfg = load_config(&args.common)?;
    if let Some(a) = args.algorithm {
        cfg.algorithm = a;
    }
    if let Some(s) = args.speed_max {
        cfg.speed_max = s;
    }
    let cfg = validate_config(cfg)?;
    prepare_out(&args.common.out)?;

    let seeds = if args.common.seeds.is_empty() {
        vec![cfg.seed]
    } else {
        args.common.seeds.clone()
    };
    let mut reports = Vec::new();
    for seed in seeds {
        let cfg = SimConfig { seed, ..cfg.clone() };
        let report = engine::run(&cfg)?;
        write_report(&args.common.out, &format!("run_{seed}"), &report)?;
        let t = &report.totals;
        println!(
            "{} seed={} messages={} (hello={} weight={} newid={} hpadapt={}) final_energy_variance={:.4} max_ch_tenure={}",
            cfg.algorithm,
            seed,
            t.total,
            t.hello,
            t.weight_report,
            t.new_id_assign,
            t.hp_adapt,
            report.final_energy_variance,
            report.max_tenure(),
        );
        reports.push(report);
    }
    Ok(reports)
}

/// One line of `sweep.csv`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub algorithm: Algorithm,
    pub speed_max: f64,
    pub mean_total_messages: f64,
    pub mean_final_energy_variance: f64,
}

/// Pointwise mean of one series row across seeds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeanSeriesRow {
    pub tick: u64,
    pub msgs_hello: f64,
    pub msgs_weight: f64,
    pub msgs_newid: f64,
    pub msgs_hpadapt: f64,
    pub energy_var: f64,
    pub n_clusters: f64,
    pub reaffiliations: f64,
    pub mean_hp: f64,
}

/// Pointwise mean of equally long series.
pub fn mean_series(runs: &[&[SeriesRow]]) -> Vec<MeanSeriesRow> {
    let Some(first) = runs.first() else {
        return Vec::new();
    };
    let n = runs.len() as f64;
    (0..first.len())
        .map(|i| {
            let mean = |f: &dyn Fn(&SeriesRow) -> f64| runs.iter().map(|r| f(&r[i])).sum::<f64>() / n;
            MeanSeriesRow {
                tick: first[i].tick,
                msgs_hello: mean(&|r| r.msgs_hello as f64),
                msgs_weight: mean(&|r| r.msgs_weight as f64),
                msgs_newid: mean(&|r| r.msgs_newid as f64),
                msgs_hpadapt: mean(&|r| r.msgs_hpadapt as f64),
                energy_var: mean(&|r| r.energy_var),
                n_clusters: mean(&|r| r.n_clusters as f64),
                reaffiliations: mean(&|r| r.reaffiliations as f64),
                mean_hp: mean(&|r| r.mean_hp),
            }
        })
        .collect()
}

fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), CliError> {
    let mut buf = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        for r in rows {
            w.serialize(r).map_err(|e| (path.to_path_buf(), e))?;
        }
        w.flush().map_err(|e| CliError::io(format!("writing {}", path.display()), e))?;
    }
    write_file(path, &buf)
}

/// `sweep`: runs the full cross product, then writes `sweep.csv` and one
/// seed-averaged `series_<ALG>_<speed>.csv` per cell.
pub fn cmd_sweep(args: &SweepArgs) -> Result<Vec<SweepRow>, CliError> {
    let base = load_config(&args.common)?;
    let base = validate_config(base)?;
    let algorithms = if args.algorithm.is_empty() {
        Algorithm::ALL.to_vec()
    } else {
        args.algorithm.clone()
    };
    let speeds = if args.speed_max.is_empty() {
        vec![base.speed_max]
    } else {
        args.speed_max.clone()
    };
    let seeds: Vec<u64> = if args.common.seeds.is_empty() {
        (base.seed..base.seed + DEFAULT_REPLICATIONS).collect()
    } else {
        args.common.seeds.clone()
    };

    let mut jobs = Vec::new();
    for &algorithm in &algorithms {
        for &speed_max in &speeds {
            let cfg = validate_config(SimConfig {
                algorithm,
                speed_max,
                ..base.clone()
            })?;
            for &seed in &seeds {
                jobs.push(SimConfig { seed, ..cfg.clone() });
            }
        }
    }
    prepare_out(&args.common.out)?;

    let reports: Vec<MetricsReport> = jobs
        .par_iter()
        .map(|cfg| engine::run(cfg).expect("validated above"))
        .collect();

    let mut rows = Vec::new();
    for (cell, chunk) in reports.chunks(seeds.len()).enumerate() {
        let algorithm = algorithms[cell / speeds.len()];
        let speed_max = speeds[cell % speeds.len()];
        let n = chunk.len() as f64;
        let row = SweepRow {
            algorithm,
            speed_max,
            mean_total_messages: chunk.iter().map(|r| r.totals.total as f64).sum::<f64>() / n,
            mean_final_energy_variance: chunk.iter().map(|r| r.final_energy_variance).sum::<f64>() / n,
        };
        println!(
            "{:<6} speed_max={:<6} mean_total_messages={:<12.1} mean_final_energy_variance={:.4}",
            row.algorithm, row.speed_max, row.mean_total_messages, row.mean_final_energy_variance
        );
        let series: Vec<&[SeriesRow]> = chunk.iter().map(|r| r.series.as_slice()).collect();
        let path = args.common.out.join(format!("series_{}_{}.csv", algorithm, speed_max));
        write_rows(&path, &mean_series(&series))?;
        rows.push(row);
    }
    write_rows(&args.common.out.join("sweep.csv"), &rows)?;
    Ok(rows)
}

/// Parses `args` and runs the chosen command; returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = match &cli.command {
        Command::Run(a) => cmd_run(a).map(|_| ()),
        Command::Sweep(a) => cmd_sweep(a).map(|_| ()),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

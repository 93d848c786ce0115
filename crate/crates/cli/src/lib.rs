//! `canopyflux` command line: synthetic data, ingest, features, training,
//! reporting and plotting, one TOML config per site.

pub mod config;
pub mod error;
pub mod manifest;
pub mod plot;
pub mod stages;

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use config::{load, Loaded, SiteConfig};
pub use error::{CliError, Stage};

#[derive(Debug, Parser)]
#[command(name = "canopyflux", version, about = "Sap-flow to Sentinel-2 canopy transpiration models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Worker threads for model fitting (default: one per core).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic site (inputs plus truth.json).
    Synth(StageArgs),
    /// Sap flow to weekly transpiration; weekly spectra and meteorology.
    Ingest(StageArgs),
    /// Join weekly tables into one feature file per feature set.
    Features(StageArgs),
    /// Repeated cross-validation, final forest and importance.
    Train(StageArgs),
    /// Merge cross-validation results of one or more sites.
    Report(ReportArgs),
    /// SVG chart of weekly transpiration.
    Plot(StageArgs),
    /// ingest, features, train, report and plot in one go.
    Pipeline(StageArgs),
}

#[derive(Debug, Args)]
pub struct StageArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides `[output] dir`.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Overrides `[cv] seed` (or `[synth] seed` for `synth`).
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Repeat for several sites.
    #[arg(long, required = true)]
    pub config: Vec<PathBuf>,
    /// Where report.json goes; defaults to the first config's output dir.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

fn out_dir(cfg: &Loaded, args: &StageArgs) -> PathBuf {
    args.out_dir.clone().unwrap_or_else(|| cfg.out_dir())
}

/// Tables destined for standard output are buffered and written even when a
/// later stage fails.
pub fn run(cli: Cli, stdout: &mut dyn Write) -> Result<(), CliError> {
    let mut buf: Vec<u8> = Vec::new();
    let result = match cli.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Internal(format!("thread pool: {e}")))
            .and_then(|pool| pool.install(|| dispatch(cli.command, &mut buf))),
        None => dispatch(cli.command, &mut buf),
    };
    stdout
        .write_all(&buf)
        .and_then(|()| stdout.flush())
        .map_err(|e| CliError::Internal(format!("stdout: {e}")))?;
    result
}

fn dispatch(command: Command, stdout: &mut dyn Write) -> Result<(), CliError> {
    match command {
        Command::Synth(a) => {
            let cfg = load(&a.config)?;
            stages::synth(&cfg, a.out_dir.as_deref(), a.seed).map(|_| ())
        }
        Command::Ingest(a) => {
            let cfg = load(&a.config)?;
            stages::ingest(&cfg, &out_dir(&cfg, &a))
        }
        Command::Features(a) => {
            let cfg = load(&a.config)?;
            stages::features(&cfg, &out_dir(&cfg, &a))
        }
        Command::Train(a) => {
            let cfg = load(&a.config)?;
            stages::train(&cfg, &out_dir(&cfg, &a), a.seed).map(|_| ())
        }
        Command::Report(a) => {
            let mut cfgs = Vec::new();
            for path in &a.config {
                let cfg = load(path)?;
                let dir = match (&a.out_dir, a.config.len()) {
                    (Some(d), 1) => d.clone(),
                    _ => cfg.out_dir(),
                };
                cfgs.push((cfg, dir));
            }
            let out = a.out_dir.clone().unwrap_or_else(|| cfgs[0].1.clone());
            stages::report(&cfgs, &out, stdout).map(|_| ())
        }
        Command::Plot(a) => {
            let cfg = load(&a.config)?;
            stages::plot(&cfg, &out_dir(&cfg, &a)).map(|_| ())
        }
        Command::Pipeline(a) => {
            let cfg = load(&a.config)?;
            stages::pipeline(&cfg, &out_dir(&cfg, &a), a.seed, stdout)
        }
    }
}

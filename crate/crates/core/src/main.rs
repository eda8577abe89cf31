use clap::{Args, Parser, Subcommand};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use kicked_top::experiments::{
    load_config, load_manifest, parse_config, run_experiment, ExperimentConfig, ExperimentKind, GridSize, Overrides,
    RunManifest,
};
use kicked_top::Error;

#[derive(Parser)]
#[command(
    name = "kicked-top",
    version,
    about = "Kicked-top experiments: flooding, kappa sweeps, phase maps, spectra"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Husimi flooding of a coherent state into the chaotic sea.
    Flooding(RunArgs),
    /// Time-averaged entanglement as a function of kappa.
    KappaSweep(RunArgs),
    /// Entanglement and Lyapunov classification over a phase-space grid.
    PhaseMap(RunArgs),
    /// Floquet spectrum statistics and the optional overlap-entropy map.
    Spectral(RunArgs),
    /// Re-run the configuration stored in a run manifest.
    Rerun {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        threads: Option<usize>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// key = value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (results do not depend on this).
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    j: Option<f64>,
    #[arg(long, allow_hyphen_values = true, value_parser = number)]
    alpha: Option<f64>,
    #[arg(long, allow_hyphen_values = true, value_parser = number)]
    kappa: Option<f64>,
    /// Comma-separated, strictly increasing.
    #[arg(long, value_delimiter = ',', value_parser = number)]
    kappa_grid: Option<Vec<f64>>,
    #[arg(long, value_parser = number)]
    theta: Option<f64>,
    #[arg(long, allow_hyphen_values = true, value_parser = number)]
    phi: Option<f64>,
    #[arg(long)]
    kicks: Option<usize>,
    /// Phase-space grid as NxM (theta rows x phi columns).
    #[arg(long)]
    grid: Option<GridSize>,
    /// Also compute the overlap-entropy map (spectral only).
    #[arg(long)]
    overlap_map: bool,
}

fn number(s: &str) -> Result<f64, String> {
    kicked_top::experiments::config::parse_number(s)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(manifest) => {
            let dir = &manifest.config.output_dir;
            println!(
                "{} finished in {:.2} s; {} files in {dir}",
                manifest.config.experiment,
                manifest.wall_clock_seconds,
                manifest.outputs.len() + 1
            );
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("kicked-top: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(command: Command) -> Result<RunManifest, Error> {
    let (cfg, threads) = match command {
        Command::Flooding(a) => build(ExperimentKind::Flooding, a)?,
        Command::KappaSweep(a) => build(ExperimentKind::KappaSweep, a)?,
        Command::PhaseMap(a) => build(ExperimentKind::PhaseMap, a)?,
        Command::Spectral(a) => build(ExperimentKind::Spectral, a)?,
        Command::Rerun { manifest, out, threads } => {
            let mut cfg = load_manifest(&manifest)?.config;
            if let Some(out) = out {
                cfg.output_dir = out.to_string_lossy().into_owned();
            }
            (cfg, threads)
        }
    };
    if threads == Some(0) {
        return Err(Error::Config {
            line: None,
            msg: "--threads must be at least 1".into(),
        });
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::Config {
            line: None,
            msg: format!("cannot start thread pool: {e}"),
        })?;
    pool.install(|| run_experiment(&cfg, Path::new(&cfg.output_dir)))
}

fn build(kind: ExperimentKind, a: RunArgs) -> Result<(ExperimentConfig, Option<usize>), Error> {
    let overrides = Overrides {
        experiment: Some(kind),
        j: a.j,
        alpha: a.alpha,
        kappa: a.kappa,
        kappa_grid: a.kappa_grid,
        theta: a.theta,
        phi: a.phi,
        n_kicks: a.kicks,
        grid: a.grid,
        seed: a.seed,
        output_dir: a.out.map(|p| p.to_string_lossy().into_owned()),
    };
    let mut cfg = match &a.config {
        Some(path) => {
            let cfg = load_config(Some(path), &overrides)?;
            if cfg.experiment != kind
                && !(kind == ExperimentKind::Spectral && cfg.experiment == ExperimentKind::OverlapMap)
            {
                return Err(Error::Config {
                    line: None,
                    msg: format!("config is for '{}' but the subcommand is '{kind}'", cfg.experiment),
                });
            }
            cfg
        }
        None => parse_config("", &overrides)?,
    };
    if a.overlap_map {
        cfg.overlap_map = true;
    }
    Ok((cfg, a.threads))
}

//! Reproducible experiment runs: configuration, protocols and file output.

pub mod config;
pub mod output;
pub mod runs;

use serde::{Deserialize, Serialize};
use std::path::Path;
use std::time::Instant;

pub use config::{load_config, parse_config, ExperimentConfig, ExperimentKind, GridSize, Overrides};
pub use output::{OutputRecord, OutputWriter, PgmScale};
pub use runs::{
    run_flooding, run_kappa_sweep, run_phase_map, run_spectral, spearman, FloodRow, FloodingResult, KappaSweepResult,
    OverlapMap, OverlapRow, PhaseMapResult, PhaseMapRow, SpectralResult, SweepRow,
};

use crate::error::{Error, Result};
use output::Cell;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const SUMMARY_FILE: &str = "summary.json";

/// Conventions that change numbers if altered; echoed in every manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Conventions {
    pub floquet_order: String,
    pub coherent_state_phase: String,
    pub entropy_units: String,
    pub time_average: String,
    pub phase_space_grid: String,
    pub rng: String,
}

impl Conventions {
    pub fn current() -> Self {
        Self {
            floquet_order: crate::floquet::FLOQUET_CONVENTION.into(),
            coherent_state_phase:
                "|theta,phi> = sum_k sqrt(C(2j,k)) cos^(2j-k)(theta/2) sin^k(theta/2) e^(+i k phi) |j, j-k>".into(),
            entropy_units: "E = 1 - Tr(rho^2) of the two-qubit marginal; von Neumann entropies in nats".into(),
            time_average: "mean over kicks t = 1..n_kicks".into(),
            phase_space_grid: "rows uniform in cos(theta) (theta from 0 to pi), columns phi = 2 pi (k + 1/2) / n_phi; \
                               Husimi cells averaged with 4-point Gauss-Legendre in cos(theta)"
                .into(),
            rng: "ChaCha8, stream = grid/sample index, seed from config".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config: ExperimentConfig,
    pub code_version: String,
    pub conventions: Conventions,
    pub threads: usize,
    pub wall_clock_seconds: f64,
    pub outputs: Vec<OutputRecord>,
    pub pgm_scales: Vec<PgmScale>,
}

impl RunManifest {
    pub fn checksum(&self, file: &str) -> Option<&str> {
        self.outputs.iter().find(|r| r.file == file).map(|r| r.sha256.as_str())
    }
}

pub fn load_manifest(path: &Path) -> Result<RunManifest> {
    let text = std::fs::read_to_string(path)?;
    let manifest: RunManifest =
        serde_json::from_str(&text).map_err(|e| Error::config(Some(e.line()), format!("{}: {e}", path.display())))?;
    manifest.config.validate()?;
    Ok(manifest)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotSummary {
    pub t: usize,
    pub island_mass: f64,
    pub sea_mass: f64,
    pub participation_ratio: f64,
    pub file: String,
}

/// Content of `summary.json`; one variant per experiment family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "experiment", rename_all = "snake_case")]
pub enum Summary {
    Flooding {
        island_fraction: f64,
        snapshots: Vec<SnapshotSummary>,
    },
    KappaSweep {
        spearman: Option<f64>,
        rows: Vec<SweepRow>,
    },
    PhaseMap {
        n_points: usize,
        chaotic_fraction: f64,
        e_chaotic: Option<f64>,
        e_regular: Option<f64>,
        ratio: Option<f64>,
    },
    Spectral {
        dim: usize,
        mean_spacing_ratio: Option<f64>,
        overlap_mean_chaotic: Option<f64>,
        overlap_mean_regular: Option<f64>,
    },
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

/// Run `cfg`, write its outputs into `out_dir` and finish with the manifest.
/// The directory is checked for writability before any computation.
pub fn run_experiment(cfg: &ExperimentConfig, out_dir: &Path) -> Result<RunManifest> {
    cfg.validate()?;
    let start = Instant::now();
    let mut writer = OutputWriter::prepare(out_dir)?;
    let summary = match write_results(cfg, &mut writer) {
        Ok(s) => s,
        Err(e) => {
            writer.cleanup();
            return Err(e);
        }
    };
    writer.json(SUMMARY_FILE, &summary)?;
    let manifest = RunManifest {
        config: cfg.clone(),
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        conventions: Conventions::current(),
        threads: rayon::current_num_threads(),
        wall_clock_seconds: start.elapsed().as_secs_f64(),
        outputs: writer.records().to_vec(),
        pgm_scales: writer.scales().to_vec(),
    };
    let mut text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Io(e.into()))?;
    text.push('\n');
    if let Err(e) = std::fs::write(out_dir.join(MANIFEST_FILE), text) {
        writer.cleanup();
        return Err(e.into());
    }
    Ok(manifest)
}

fn write_results(cfg: &ExperimentConfig, w: &mut OutputWriter) -> Result<Summary> {
    match cfg.experiment {
        ExperimentKind::Flooding => {
            let res = run_flooding(cfg)?;
            let rows: Vec<Vec<Cell>> = res
                .rows
                .iter()
                .map(|r| {
                    vec![
                        r.t.into(),
                        r.island_mass.into(),
                        r.sea_mass.into(),
                        r.participation_ratio.into(),
                    ]
                })
                .collect();
            w.csv(
                "flooding.csv",
                &["t", "island_mass", "sea_mass", "participation_ratio"],
                &rows,
            )?;
            let mut snapshots = Vec::new();
            for (t, q) in &res.snapshots {
                let file = format!("husimi_t{t:03}.pgm");
                w.pgm(&file, &q.values, q.grid.n_theta, q.grid.n_phi)?;
                let r = res.rows[*t];
                snapshots.push(SnapshotSummary {
                    t: *t,
                    island_mass: r.island_mass,
                    sea_mass: r.sea_mass,
                    participation_ratio: r.participation_ratio,
                    file,
                });
            }
            Ok(Summary::Flooding {
                island_fraction: res.island_fraction,
                snapshots,
            })
        }
        ExperimentKind::KappaSweep => {
            let res = run_kappa_sweep(cfg)?;
            let rows: Vec<Vec<Cell>> = res
                .rows
                .iter()
                .map(|r| vec![r.kappa.into(), r.entanglement.into(), r.lyapunov.into()])
                .collect();
            w.csv("kappa_sweep.csv", &["kappa", "entanglement", "lyapunov"], &rows)?;
            Ok(Summary::KappaSweep {
                spearman: finite(res.spearman),
                rows: res.rows,
            })
        }
        ExperimentKind::PhaseMap => {
            let res = run_phase_map(cfg)?;
            let rows: Vec<Vec<Cell>> = res
                .rows
                .iter()
                .map(|r| {
                    vec![
                        r.theta.into(),
                        r.phi.into(),
                        r.lambda.into(),
                        r.label.as_str().into(),
                        r.entanglement.into(),
                        r.weight.into(),
                    ]
                })
                .collect();
            w.csv(
                "phase_map.csv",
                &["theta", "phi", "lambda", "label", "entanglement", "weight"],
                &rows,
            )?;
            let values: Vec<f64> = res.rows.iter().map(|r| r.entanglement).collect();
            w.pgm("entanglement.pgm", &values, res.grid.n_theta, res.grid.n_phi)?;
            Ok(Summary::PhaseMap {
                n_points: res.rows.len(),
                chaotic_fraction: res.chaotic_fraction,
                e_chaotic: res.e_chaotic,
                e_regular: res.e_regular,
                ratio: res.ratio(),
            })
        }
        ExperimentKind::Spectral | ExperimentKind::OverlapMap => {
            let res = run_spectral(cfg)?;
            let rows: Vec<Vec<Cell>> = res
                .eigenphases
                .iter()
                .zip(&res.spacings)
                .enumerate()
                .map(|(k, (p, s))| vec![k.into(), (*p).into(), (*s).into()])
                .collect();
            w.csv("spectrum.csv", &["index", "eigenphase", "spacing"], &rows)?;
            if let Some(map) = &res.overlap {
                let rows: Vec<Vec<Cell>> = map
                    .rows
                    .iter()
                    .map(|r| {
                        vec![
                            r.theta.into(),
                            r.phi.into(),
                            r.lambda.into(),
                            r.label.as_str().into(),
                            r.overlap_entropy.into(),
                        ]
                    })
                    .collect();
                w.csv(
                    "overlap_map.csv",
                    &["theta", "phi", "lambda", "label", "overlap_entropy"],
                    &rows,
                )?;
                let values: Vec<f64> = map.rows.iter().map(|r| r.overlap_entropy).collect();
                w.pgm("overlap_entropy.pgm", &values, map.grid.n_theta, map.grid.n_phi)?;
            }
            Ok(Summary::Spectral {
                dim: res.eigenphases.len(),
                mean_spacing_ratio: finite(res.mean_spacing_ratio),
                overlap_mean_chaotic: res.overlap.as_ref().and_then(|m| m.mean_chaotic),
                overlap_mean_regular: res.overlap.as_ref().and_then(|m| m.mean_regular),
            })
        }
    }
}

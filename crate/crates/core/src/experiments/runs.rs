//! The experiment protocols as pure functions of a configuration.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::classical::{classify_grid, lyapunov_exponent, PhaseClassification, PhasePoint, Regime, SphereGrid};
use crate::entanglement::time_averaged_entanglement;
use crate::error::Result;
use crate::floquet::{build_floquet, overlap_entropy, spacing_statistics};
use crate::husimi::{participation_ratio, region_mass, HusimiEvaluator, QGrid, RegionMask};
use crate::spin::coherent_state;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FloodRow {
    pub t: usize,
    pub island_mass: f64,
    pub sea_mass: f64,
    pub participation_ratio: f64,
}

#[derive(Debug, Clone)]
pub struct FloodingResult {
    /// One row per kick, `t = 0..=max_time`.
    pub rows: Vec<FloodRow>,
    pub snapshots: Vec<(usize, QGrid)>,
    /// Fraction of the Husimi grid covered by the regular-region mask.
    pub island_fraction: f64,
}

impl FloodingResult {
    pub fn at(&self, t: usize) -> Option<&FloodRow> {
        self.rows.get(t)
    }
}

/// Evolve the initial coherent state and track how much Husimi weight sits
/// on classically regular cells.
pub fn run_flooding(cfg: &ExperimentConfig) -> Result<FloodingResult> {
    let spin = cfg.spin()?;
    let floquet = build_floquet(spin, cfg.alpha, cfg.kappa)?;
    let class = classify_grid(
        cfg.alpha,
        cfg.kappa,
        SphereGrid::new(cfg.grid.n_theta, cfg.grid.n_phi)?,
        &cfg.lyapunov(),
    )?;
    let qgrid = SphereGrid::new(cfg.husimi_grid.n_theta, cfg.husimi_grid.n_phi)?;
    let island = RegionMask::from_classification(&class, qgrid, Regime::Regular);
    let sea = island.complement();
    let evaluator = HusimiEvaluator::new(spin, qgrid);

    let mut psi = coherent_state(spin, cfg.theta, cfg.phi)?;
    let max_t = cfg.max_time();
    let mut rows = Vec::with_capacity(max_t + 1);
    let mut snapshots = Vec::new();
    for t in 0..=max_t {
        if t > 0 {
            psi = psi.apply(floquet.matrix())?;
        }
        let q = evaluator.evaluate(&psi);
        rows.push(FloodRow {
            t,
            island_mass: region_mass(&q, &island)?,
            sea_mass: region_mass(&q, &sea)?,
            participation_ratio: participation_ratio(&q),
        });
        if cfg.snapshot_times.contains(&t) {
            snapshots.push((t, q));
        }
    }
    Ok(FloodingResult {
        rows,
        snapshots,
        island_fraction: island.fraction(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub kappa: f64,
    pub entanglement: f64,
    /// Classical Lyapunov exponent of the initial point at this kappa.
    pub lyapunov: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KappaSweepResult {
    pub rows: Vec<SweepRow>,
    /// Rank correlation between kappa and E; NaN for fewer than two rows.
    pub spearman: f64,
}

pub fn run_kappa_sweep(cfg: &ExperimentConfig) -> Result<KappaSweepResult> {
    let spin = cfg.spin()?;
    let psi0 = coherent_state(spin, cfg.theta, cfg.phi)?;
    let p0 = PhasePoint::new(cfg.theta, cfg.phi)?;
    let settings = cfg.lyapunov();
    let rows = cfg
        .kappa_grid
        .par_iter()
        .map(|&kappa| {
            let floquet = build_floquet(spin, cfg.alpha, kappa)?;
            Ok(SweepRow {
                kappa,
                entanglement: time_averaged_entanglement(&psi0, &floquet, cfg.n_kicks)?,
                lyapunov: lyapunov_exponent(&p0, cfg.alpha, kappa, &settings, 0)?.lambda,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let kappas: Vec<f64> = rows.iter().map(|r| r.kappa).collect();
    let es: Vec<f64> = rows.iter().map(|r| r.entanglement).collect();
    Ok(KappaSweepResult {
        spearman: spearman(&kappas, &es),
        rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseMapRow {
    pub theta: f64,
    pub phi: f64,
    pub lambda: f64,
    pub label: Regime,
    pub entanglement: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseMapResult {
    pub grid: SphereGrid,
    /// Row-major over `grid`.
    pub rows: Vec<PhaseMapRow>,
    pub e_chaotic: Option<f64>,
    pub e_regular: Option<f64>,
    pub chaotic_fraction: f64,
}

impl PhaseMapResult {
    pub fn ratio(&self) -> Option<f64> {
        Some(self.e_chaotic? / self.e_regular?)
    }
}

pub fn run_phase_map(cfg: &ExperimentConfig) -> Result<PhaseMapResult> {
    let spin = cfg.spin()?;
    let floquet = build_floquet(spin, cfg.alpha, cfg.kappa)?;
    let grid = SphereGrid::new(cfg.grid.n_theta, cfg.grid.n_phi)?;
    let class = classify_grid(cfg.alpha, cfg.kappa, grid, &cfg.lyapunov())?;
    let rows = class
        .points
        .par_iter()
        .map(|cp| {
            let psi0 = coherent_state(spin, cp.point.theta, cp.point.phi)?;
            Ok(PhaseMapRow {
                theta: cp.point.theta,
                phi: cp.point.phi,
                lambda: cp.lambda,
                label: cp.label,
                entanglement: time_averaged_entanglement(&psi0, &floquet, cfg.n_kicks)?,
                weight: cp.weight,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let by_label = |regime| {
        weighted_mean(
            rows.iter()
                .filter(|r| r.label == regime)
                .map(|r| (r.entanglement, r.weight)),
        )
    };
    Ok(PhaseMapResult {
        grid,
        e_chaotic: by_label(Regime::Chaotic),
        e_regular: by_label(Regime::Regular),
        chaotic_fraction: class.chaotic_fraction(),
        rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OverlapRow {
    pub theta: f64,
    pub phi: f64,
    pub lambda: f64,
    pub label: Regime,
    /// Overlap entropy divided by ln d.
    pub overlap_entropy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OverlapMap {
    pub grid: SphereGrid,
    pub rows: Vec<OverlapRow>,
    pub mean_chaotic: Option<f64>,
    pub mean_regular: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralResult {
    pub eigenphases: Vec<f64>,
    /// `spacings[k]` is the gap above `eigenphases[k]`, the last one wrapping.
    pub spacings: Vec<f64>,
    pub mean_spacing_ratio: f64,
    pub overlap: Option<OverlapMap>,
}

pub fn run_spectral(cfg: &ExperimentConfig) -> Result<SpectralResult> {
    let spin = cfg.spin()?;
    let floquet = build_floquet(spin, cfg.alpha, cfg.kappa)?;
    let diag = spacing_statistics(&floquet)?;
    let eigenphases = floquet.eigen()?.eigenphases.clone();

    let overlap = if cfg.overlap_map || cfg.experiment == super::config::ExperimentKind::OverlapMap {
        let grid = SphereGrid::new(cfg.grid.n_theta, cfg.grid.n_phi)?;
        let class = classify_grid(cfg.alpha, cfg.kappa, grid, &cfg.lyapunov())?;
        Some(overlap_map(&floquet, &class)?)
    } else {
        None
    };
    Ok(SpectralResult {
        eigenphases,
        spacings: diag.spacings,
        mean_spacing_ratio: diag.mean_spacing_ratio,
        overlap,
    })
}

fn overlap_map(floquet: &crate::floquet::FloquetOperator, class: &PhaseClassification) -> Result<OverlapMap> {
    let spin = floquet.spin();
    let ln_d = (floquet.dim() as f64).ln();
    let rows = class
        .points
        .par_iter()
        .map(|cp| {
            let psi = coherent_state(spin, cp.point.theta, cp.point.phi)?;
            Ok(OverlapRow {
                theta: cp.point.theta,
                phi: cp.point.phi,
                lambda: cp.lambda,
                label: cp.label,
                overlap_entropy: overlap_entropy(&psi, floquet)? / ln_d,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let w = class.points.first().map_or(0.0, |p| p.weight);
    let by_label = |regime| {
        weighted_mean(
            rows.iter()
                .filter(|r| r.label == regime)
                .map(|r| (r.overlap_entropy, w)),
        )
    };
    Ok(OverlapMap {
        grid: class.grid,
        mean_chaotic: by_label(Regime::Chaotic),
        mean_regular: by_label(Regime::Regular),
        rows,
    })
}

/// `sum w x / sum w`, or `None` when there is no weight.
pub fn weighted_mean(items: impl Iterator<Item = (f64, f64)>) -> Option<f64> {
    let (num, den) = items.fold((0.0, 0.0), |(n, d), (x, w)| (n + w * x, d + w));
    (den > 0.0).then(|| num / den)
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    if x.len() < 2 {
        return f64::NAN;
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    sxy / (sxx * syy).sqrt()
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut out = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = rank;
        }
        i = j + 1;
    }
    out
}

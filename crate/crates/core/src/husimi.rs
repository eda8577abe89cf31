//! Husimi Q-function on the sphere.
//!
//! `Q(theta, phi) = (2j+1)/(4 pi) |<theta, phi|psi>|^2`, normalized so that
//! its integral over the sphere is 1.

use rayon::prelude::*;
use std::f64::consts::PI;

use crate::classical::{PhaseClassification, Regime, SphereGrid};
use crate::error::{Error, Result};
use crate::spin::{coherent_magnitudes, coherent_state, ln_binomials, SpinState};
use crate::C64;

/// Four-point Gauss-Legendre rule on [-1, 1].
const GAUSS_NODES: [f64; 4] = [
    -0.861_136_311_594_052_6,
    -0.339_981_043_584_856_3,
    0.339_981_043_584_856_3,
    0.861_136_311_594_052_6,
];
const GAUSS_WEIGHTS: [f64; 4] = [
    0.347_854_845_137_453_9,
    0.652_145_154_862_546_1,
    0.652_145_154_862_546_1,
    0.347_854_845_137_453_9,
];

pub const DEFAULT_GRID: (usize, usize) = (128, 256);

/// Q at a single direction.
pub fn husimi_value(state: &SpinState, theta: f64, phi: f64) -> Result<f64> {
    let coh = coherent_state(state.spin(), theta, phi)?;
    let overlap = coh.inner(state)?;
    Ok(state.dim() as f64 / (4.0 * PI) * overlap.norm_sqr())
}

/// Q sampled on an equal-area grid.
///
/// Each value is the average of Q over its row band in cos(theta) (four
/// Gauss points per band) at the cell's centre azimuth. The azimuthal sum is
/// exact for spin states once `n_phi > 2j`, so the quadrature
/// `sum(values) * cell_area` reproduces the total probability to rounding.
#[derive(Debug, Clone, PartialEq)]
pub struct QGrid {
    pub grid: SphereGrid,
    /// Row-major, rows from theta = 0 to pi.
    pub values: Vec<f64>,
}

impl QGrid {
    pub fn cell_area(&self) -> f64 {
        self.grid.cell_area()
    }

    pub fn value(&self, i: usize, k: usize) -> f64 {
        self.values[self.grid.index(i, k)]
    }

    /// Probability carried by each cell.
    pub fn cell_masses(&self) -> impl Iterator<Item = f64> + '_ {
        let a = self.cell_area();
        self.values.iter().map(move |v| v * a)
    }

    pub fn total_mass(&self) -> f64 {
        self.cell_masses().sum()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.grid.n_phi..(i + 1) * self.grid.n_phi]
    }
}

pub fn husimi_grid(state: &SpinState, n_theta: usize, n_phi: usize) -> Result<QGrid> {
    if n_theta < 8 || n_phi < 8 {
        return Err(Error::domain(format!(
            "Husimi grid needs at least 8x8 cells, got {n_theta}x{n_phi}"
        )));
    }
    let grid = SphereGrid::new(n_theta, n_phi)?;
    let evaluator = HusimiEvaluator::new(state.spin(), grid);
    Ok(evaluator.evaluate(state))
}

/// Precomputed coherent-state tables for repeated grids at a fixed `j`.
#[derive(Debug, Clone)]
pub struct HusimiEvaluator {
    grid: SphereGrid,
    dim: usize,
    /// `[row][gauss][k]` real magnitudes.
    magnitudes: Vec<[Vec<f64>; 4]>,
    /// `[col][k]` = e^{-i k phi_col}.
    phases: Vec<Vec<C64>>,
}

impl HusimiEvaluator {
    pub fn new(spin: crate::spin::SpinQuantumNumber, grid: SphereGrid) -> Self {
        let ln_binom = ln_binomials(spin.twice_j() as usize);
        let half_band = 1.0 / grid.n_theta as f64;
        let magnitudes = (0..grid.n_theta)
            .map(|i| {
                let zc = grid.cos_theta(i);
                std::array::from_fn(|g| {
                    let z = (zc + half_band * GAUSS_NODES[g]).clamp(-1.0, 1.0);
                    coherent_magnitudes(spin, z.acos(), &ln_binom)
                })
            })
            .collect();
        let dim = spin.dim();
        let phases = (0..grid.n_phi)
            .map(|col| {
                let phi = grid.phi(col);
                (0..dim).map(|k| C64::from_polar(1.0, -(k as f64) * phi)).collect()
            })
            .collect();
        Self {
            grid,
            dim,
            magnitudes,
            phases,
        }
    }

    pub fn grid(&self) -> SphereGrid {
        self.grid
    }

    pub fn evaluate(&self, state: &SpinState) -> QGrid {
        assert_eq!(state.dim(), self.dim, "state dimension does not match evaluator");
        let psi = state.amplitudes();
        let norm = self.dim as f64 / (4.0 * PI);
        let n_phi = self.grid.n_phi;
        let mut values = vec![0.0; self.grid.len()];
        values.par_chunks_mut(n_phi).enumerate().for_each(|(i, row)| {
            for (g, mags) in self.magnitudes[i].iter().enumerate() {
                let weighted: Vec<C64> = mags.iter().zip(psi.iter()).map(|(&a, &c)| c * a).collect();
                for (col, out) in row.iter_mut().enumerate() {
                    let ov: C64 = weighted.iter().zip(&self.phases[col]).map(|(w, p)| w * p).sum();
                    // Band average: weights sum to 2 over [-1, 1].
                    *out += 0.5 * GAUSS_WEIGHTS[g] * norm * ov.norm_sqr();
                }
            }
        });
        QGrid {
            grid: self.grid,
            values,
        }
    }
}

/// Boolean selection of grid cells.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionMask {
    pub grid: SphereGrid,
    pub cells: Vec<bool>,
}

impl RegionMask {
    pub fn new(grid: SphereGrid, cells: Vec<bool>) -> Result<Self> {
        if cells.len() != grid.len() {
            return Err(Error::domain("mask length does not match grid"));
        }
        Ok(Self { grid, cells })
    }

    pub fn filled(grid: SphereGrid, value: bool) -> Self {
        Self {
            grid,
            cells: vec![value; grid.len()],
        }
    }

    /// Cells of `target` whose centre falls in a `regime` cell of the
    /// classification (nearest-neighbour resampling).
    pub fn from_classification(class: &PhaseClassification, target: SphereGrid, regime: Regime) -> Self {
        let cells = (0..target.len())
            .map(|idx| {
                let (i, k) = (idx / target.n_phi, idx % target.n_phi);
                class.label_near(target.theta(i), target.phi(k)) == regime
            })
            .collect();
        Self { grid: target, cells }
    }

    pub fn complement(&self) -> Self {
        Self {
            grid: self.grid,
            cells: self.cells.iter().map(|c| !c).collect(),
        }
    }

    pub fn fraction(&self) -> f64 {
        self.cells.iter().filter(|&&c| c).count() as f64 / self.cells.len() as f64
    }
}

/// Probability inside the masked cells.
pub fn region_mass(q: &QGrid, mask: &RegionMask) -> Result<f64> {
    if mask.grid != q.grid {
        return Err(Error::domain(format!(
            "mask grid {}x{} does not match Q grid {}x{}",
            mask.grid.n_theta, mask.grid.n_phi, q.grid.n_theta, q.grid.n_phi
        )));
    }
    Ok(q.cell_masses()
        .zip(&mask.cells)
        .filter(|(_, &m)| m)
        .map(|(p, _)| p)
        .sum())
}

/// `1 / sum p_i^2` over cell probabilities; 1 for a single cell, the cell
/// count for a uniform distribution.
pub fn participation_ratio(q: &QGrid) -> f64 {
    let total = q.total_mass();
    let sum_sq: f64 = q.cell_masses().map(|p| (p / total).powi(2)).sum();
    1.0 / sum_sq
}

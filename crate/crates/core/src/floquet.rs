//! Kicked-top Floquet operator, stroboscopic evolution and spectral diagnostics.
//!
//! One period is a rotation about y by `alpha` followed by the twist
//! `exp(-i kappa Jz^2 / 2j)`:
//!
//! ```text
//! U = exp(-i (kappa / 2j) Jz^2) exp(-i alpha Jy)
//! ```

use nalgebra::{DMatrix, DVector, Schur};
use std::f64::consts::TAU;
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::spin::{max_abs, rotation_unitary, SpinQuantumNumber, SpinState};
use crate::C64;

/// Convention identifier written into run manifests.
pub const FLOQUET_CONVENTION: &str = "U = exp(-i kappa/(2j) Jz^2) exp(-i alpha Jy)";

const EIGEN_RESIDUAL_TOL: f64 = 1e-8;

/// Eigenphases in [0, 2pi), ascending, with matching eigenvector columns.
#[derive(Debug, Clone)]
pub struct FloquetEigen {
    pub eigenphases: Vec<f64>,
    pub eigenvectors: DMatrix<C64>,
}

impl FloquetEigen {
    pub fn eigenvector(&self, k: usize) -> DVector<C64> {
        self.eigenvectors.column(k).into_owned()
    }
}

#[derive(Debug)]
pub struct FloquetOperator {
    spin: SpinQuantumNumber,
    alpha: f64,
    kappa: f64,
    matrix: DMatrix<C64>,
    eigen: OnceLock<FloquetEigen>,
}

impl Clone for FloquetOperator {
    fn clone(&self) -> Self {
        let eigen = OnceLock::new();
        if let Some(e) = self.eigen.get() {
            let _ = eigen.set(e.clone());
        }
        Self {
            spin: self.spin,
            alpha: self.alpha,
            kappa: self.kappa,
            matrix: self.matrix.clone(),
            eigen,
        }
    }
}

impl FloquetOperator {
    /// Wrap an arbitrary unitary (used for identity/reference operators in
    /// tests and for externally supplied maps). Unitarity is checked.
    pub fn from_unitary(spin: SpinQuantumNumber, matrix: DMatrix<C64>) -> Result<Self> {
        if matrix.nrows() != spin.dim() || matrix.ncols() != spin.dim() {
            return Err(Error::domain("unitary size does not match 2j+1"));
        }
        let err = crate::spin::unitarity_error(&matrix);
        if err > 1e-10 {
            return Err(Error::domain(format!("matrix is not unitary (error {err:e})")));
        }
        Ok(Self {
            spin,
            alpha: f64::NAN,
            kappa: f64::NAN,
            matrix,
            eigen: OnceLock::new(),
        })
    }

    pub fn spin(&self) -> SpinQuantumNumber {
        self.spin
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    /// Cached eigendecomposition, computed on first use.
    pub fn eigen(&self) -> Result<&FloquetEigen> {
        if let Some(e) = self.eigen.get() {
            return Ok(e);
        }
        let e = eigendecompose_unitary(&self.matrix)?;
        // A concurrent caller may have won the race; both results are identical.
        let _ = self.eigen.set(e);
        Ok(self.eigen.get().expect("eigen cache initialized"))
    }
}

/// Build the kicked-top Floquet operator for spin `j`.
pub fn build_floquet(spin: SpinQuantumNumber, alpha: f64, kappa: f64) -> Result<FloquetOperator> {
    if !alpha.is_finite() || !kappa.is_finite() {
        return Err(Error::domain("alpha and kappa must be finite"));
    }
    let rotation = rotation_unitary(spin, [0.0, 1.0, 0.0], alpha)?;
    let strength = kappa / (2.0 * spin.j());
    let mut matrix = rotation;
    // Left-multiplying by a diagonal phase scales rows.
    for r in 0..spin.dim() {
        let m = spin.m_at(r);
        let ph = C64::from_polar(1.0, -strength * m * m);
        for c in 0..spin.dim() {
            matrix[(r, c)] *= ph;
        }
    }
    Ok(FloquetOperator {
        spin,
        alpha,
        kappa,
        matrix,
        eigen: OnceLock::new(),
    })
}

/// Apply the map `n_kicks` times.
pub fn evolve(state: &SpinState, floquet: &FloquetOperator, n_kicks: usize) -> Result<SpinState> {
    check_dims(state, floquet)?;
    let mut psi = state.clone();
    for _ in 0..n_kicks {
        psi = psi.apply(&floquet.matrix)?;
    }
    Ok(psi)
}

/// States at t = 0, 1, ..., n_kicks.
pub fn trajectory(state: &SpinState, floquet: &FloquetOperator, n_kicks: usize) -> Result<Vec<SpinState>> {
    check_dims(state, floquet)?;
    let mut out = Vec::with_capacity(n_kicks + 1);
    out.push(state.clone());
    for t in 0..n_kicks {
        let next = out[t].apply(&floquet.matrix)?;
        out.push(next);
    }
    Ok(out)
}

fn check_dims(state: &SpinState, floquet: &FloquetOperator) -> Result<()> {
    if state.dim() != floquet.dim() {
        return Err(Error::domain(format!(
            "state dimension {} does not match Floquet dimension {}",
            state.dim(),
            floquet.dim()
        )));
    }
    Ok(())
}

/// Full eigendecomposition of the Floquet operator.
pub fn eigendecompose(floquet: &FloquetOperator) -> Result<FloquetEigen> {
    floquet.eigen().cloned()
}

/// Eigendecomposition of a unitary via its complex Schur form. For a normal
/// matrix the triangular factor is diagonal up to rounding, so the Schur
/// vectors are the eigenvectors even inside degenerate subspaces.
pub fn eigendecompose_unitary(u: &DMatrix<C64>) -> Result<FloquetEigen> {
    let n = u.nrows();
    let schur = Schur::try_new(u.clone(), f64::EPSILON, 10_000)
        .ok_or_else(|| Error::Numerical(format!("Schur iteration did not converge for a {n}x{n} unitary")))?;
    let (q, t) = schur.unpack();
    let offdiag = (0..n)
        .flat_map(|r| (r + 1..n).map(move |c| (r, c)))
        .map(|(r, c)| t[(r, c)].norm())
        .fold(0.0, f64::max);

    let mut pairs: Vec<(f64, usize)> = (0..n)
        .map(|k| {
            let p = t[(k, k)].arg().rem_euclid(TAU);
            (if p >= TAU { 0.0 } else { p }, k)
        })
        .collect();
    let key = |k: usize| -> Vec<(f64, f64)> { q.column(k).iter().map(|z| (z.re, z.im)).collect() };
    pairs.sort_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| key(a.1).partial_cmp(&key(b.1)).unwrap_or(std::cmp::Ordering::Equal))
    });

    let eigenphases: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let mut vectors = DMatrix::<C64>::zeros(n, n);
    for (dst, &(_, src)) in pairs.iter().enumerate() {
        vectors.set_column(dst, &q.column(src));
    }

    let mut worst = 0.0f64;
    for (k, &ph) in eigenphases.iter().enumerate() {
        let v = vectors.column(k);
        let r = (u * v - v * C64::from_polar(1.0, ph)).norm();
        worst = worst.max(r);
    }
    if worst > EIGEN_RESIDUAL_TOL {
        return Err(Error::Numerical(format!(
            "eigenvector residual {worst:e} exceeds {EIGEN_RESIDUAL_TOL:e} \
             (dimension {n}, Schur off-diagonal {offdiag:e})"
        )));
    }
    Ok(FloquetEigen {
        eigenphases,
        eigenvectors: vectors,
    })
}

/// ||U - V diag(e^{i theta}) V^dagger||_max
pub fn reconstruction_error(u: &DMatrix<C64>, eigen: &FloquetEigen) -> f64 {
    let n = u.nrows();
    let lambda = DMatrix::from_fn(n, n, |r, c| {
        if r == c {
            C64::from_polar(1.0, eigen.eigenphases[r])
        } else {
            C64::from(0.0)
        }
    });
    max_abs(&(u - &eigen.eigenvectors * lambda * eigen.eigenvectors.adjoint()))
}

/// Populations |<v_k|psi>|^2 of the state on the Floquet eigenbasis.
pub fn eigenbasis_populations(state: &SpinState, floquet: &FloquetOperator) -> Result<Vec<f64>> {
    check_dims(state, floquet)?;
    let eigen = floquet.eigen()?;
    let coeffs = eigen.eigenvectors.adjoint() * state.amplitudes();
    Ok(coeffs.iter().map(|c| c.norm_sqr()).collect())
}

/// Shannon entropy (nats) of the eigenbasis populations; in [0, ln d].
pub fn overlap_entropy(state: &SpinState, floquet: &FloquetOperator) -> Result<f64> {
    let pops = eigenbasis_populations(state, floquet)?;
    let total: f64 = pops.iter().sum();
    if (total - 1.0).abs() > 1e-10 {
        return Err(Error::Numerical(format!("eigenbasis populations sum to {total}")));
    }
    let h: f64 = pops.iter().filter(|&&p| p > 0.0).map(|&p| -p * p.ln()).sum();
    Ok(h.clamp(0.0, (pops.len() as f64).ln()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDiagnostics {
    /// Gaps between consecutive eigenphases around the circle; sums to 2pi.
    pub spacings: Vec<f64>,
    /// Mean of min(s_k, s_{k+1}) / max(s_k, s_{k+1}).
    pub mean_spacing_ratio: f64,
    /// ln d, the largest possible overlap entropy.
    pub overlap_entropy_max: f64,
}

/// Level-spacing diagnostics of the Floquet spectrum (no symmetry reduction).
pub fn spacing_statistics(floquet: &FloquetOperator) -> Result<SpectralDiagnostics> {
    let eigen = floquet.eigen()?;
    Ok(spacing_statistics_from_phases(&eigen.eigenphases))
}

/// Same diagnostics for an arbitrary set of phases (any order, any range).
pub fn spacing_statistics_from_phases(phases: &[f64]) -> SpectralDiagnostics {
    let mut p: Vec<f64> = phases.iter().map(|x| x.rem_euclid(TAU)).collect();
    p.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let n = p.len();
    let spacings: Vec<f64> = if n == 0 {
        Vec::new()
    } else {
        (0..n)
            .map(|k| {
                if k + 1 < n {
                    p[k + 1] - p[k]
                } else {
                    TAU - p[n - 1] + p[0]
                }
            })
            .collect()
    };
    SpectralDiagnostics {
        mean_spacing_ratio: mean_spacing_ratio(&spacings),
        spacings,
        overlap_entropy_max: (n.max(1) as f64).ln(),
    }
}

/// Mean consecutive-gap ratio. Two exactly degenerate gaps count as ratio 1.
pub fn mean_spacing_ratio(spacings: &[f64]) -> f64 {
    if spacings.len() < 2 {
        return f64::NAN;
    }
    let ratios: Vec<f64> = spacings
        .windows(2)
        .map(|w| {
            let (lo, hi) = if w[0] <= w[1] { (w[0], w[1]) } else { (w[1], w[0]) };
            if hi > 0.0 {
                lo / hi
            } else {
                1.0
            }
        })
        .collect();
    ratios.iter().sum::<f64>() / ratios.len() as f64
}

//! Spin-j algebra in the Dicke basis |j,m>, ordered m = j, j-1, ..., -j.
//!
//! Index `k` of every vector and matrix corresponds to `m = j - k`, so index 0
//! is the north-pole state |j,j> and `k` counts spin flips (qubit excitations
//! in the symmetric qubit picture).

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};
use crate::C64;

/// Tolerance used when deciding whether an angle lies in its valid range.
const ANGLE_SLACK: f64 = 1e-9;

/// Spin quantum number, stored as `2j` so half-odd values need no floats.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SpinQuantumNumber(u32);

impl SpinQuantumNumber {
    pub fn from_twice(twice_j: u32) -> Result<Self> {
        if twice_j == 0 {
            return Err(Error::domain("2j must be at least 1"));
        }
        Ok(Self(twice_j))
    }

    /// Parse a (half-)integer `j` such as `10.0` or `0.5`.
    pub fn from_f64(j: f64) -> Result<Self> {
        let twice = 2.0 * j;
        if !twice.is_finite() || twice < 0.5 || (twice - twice.round()).abs() > 1e-9 {
            return Err(Error::domain(format!("j = {j} is not a positive half-integer")));
        }
        Self::from_twice(twice.round() as u32)
    }

    pub fn twice_j(self) -> u32 {
        self.0
    }

    pub fn j(self) -> f64 {
        f64::from(self.0) / 2.0
    }

    /// Hilbert-space dimension `2j + 1`.
    pub fn dim(self) -> usize {
        self.0 as usize + 1
    }

    /// Magnetic quantum number at basis index `k`.
    pub fn m_at(self, k: usize) -> f64 {
        self.j() - k as f64
    }

    /// Basis index of magnetic quantum number `m`.
    pub fn index_of(self, m: f64) -> Result<usize> {
        let k = self.j() - m;
        let kr = k.round();
        if !k.is_finite() || (k - kr).abs() > 1e-9 || kr < 0.0 || kr > f64::from(self.0) {
            return Err(Error::domain(format!(
                "m = {m} is not in {{-j, ..., j}} for j = {}",
                self.j()
            )));
        }
        Ok(kr as usize)
    }
}

impl std::fmt::Display for SpinQuantumNumber {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.0.is_multiple_of(2) {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}/2", self.0)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorLabel {
    Jx,
    Jy,
    Jz,
    JzSquared,
    Custom,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpinOperator {
    pub matrix: DMatrix<C64>,
    pub label: OperatorLabel,
}

impl SpinOperator {
    pub fn custom(matrix: DMatrix<C64>) -> Self {
        Self {
            matrix,
            label: OperatorLabel::Custom,
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Largest element-wise deviation from Hermiticity.
    pub fn hermiticity_error(&self) -> f64 {
        max_abs(&(&self.matrix - self.matrix.adjoint()))
    }
}

/// The three Cartesian components of the angular momentum.
#[derive(Debug, Clone)]
pub struct AngularMomentum {
    pub spin: SpinQuantumNumber,
    pub jx: SpinOperator,
    pub jy: SpinOperator,
    pub jz: SpinOperator,
}

impl AngularMomentum {
    /// `n . J` for a Cartesian direction `n` (not normalized here).
    pub fn along(&self, axis: [f64; 3]) -> DMatrix<C64> {
        &self.jx.matrix * C64::from(axis[0])
            + &self.jy.matrix * C64::from(axis[1])
            + &self.jz.matrix * C64::from(axis[2])
    }

    pub fn jz_squared(&self) -> SpinOperator {
        SpinOperator {
            matrix: &self.jz.matrix * &self.jz.matrix,
            label: OperatorLabel::JzSquared,
        }
    }
}

/// Jx, Jy, Jz built from the ladder operators.
pub fn angular_momentum_matrices(spin: SpinQuantumNumber) -> AngularMomentum {
    let d = spin.dim();
    let j = spin.j();
    let jz = DMatrix::from_fn(d, d, |r, c| {
        if r == c {
            C64::from(spin.m_at(r))
        } else {
            C64::from(0.0)
        }
    });
    // J+ |j,m> = sqrt(j(j+1) - m(m+1)) |j,m+1>; m+1 sits one index above m.
    let mut raise = DMatrix::<C64>::zeros(d, d);
    for k in 1..d {
        let m = spin.m_at(k);
        raise[(k - 1, k)] = C64::from((j * (j + 1.0) - m * (m + 1.0)).sqrt());
    }
    let lower = raise.adjoint();
    let jx = (&raise + &lower) * C64::from(0.5);
    let jy = (&raise - &lower) * C64::new(0.0, -0.5);
    AngularMomentum {
        spin,
        jx: SpinOperator {
            matrix: jx,
            label: OperatorLabel::Jx,
        },
        jy: SpinOperator {
            matrix: jy,
            label: OperatorLabel::Jy,
        },
        jz: SpinOperator {
            matrix: jz,
            label: OperatorLabel::Jz,
        },
    }
}

/// Normalized state over the Dicke basis.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinState {
    spin: SpinQuantumNumber,
    amplitudes: DVector<C64>,
}

impl SpinState {
    /// Wrap a vector, normalizing it. Fails on zero or non-finite input.
    pub fn new(spin: SpinQuantumNumber, amplitudes: DVector<C64>) -> Result<Self> {
        if amplitudes.len() != spin.dim() {
            return Err(Error::domain(format!(
                "expected {} amplitudes for j = {spin}, got {}",
                spin.dim(),
                amplitudes.len()
            )));
        }
        let norm = amplitudes.norm();
        if !norm.is_finite() || norm == 0.0 {
            return Err(Error::domain("state vector has zero or non-finite norm"));
        }
        Ok(Self {
            spin,
            amplitudes: amplitudes / C64::from(norm),
        })
    }

    /// Infer `j` from the vector length.
    pub fn from_amplitudes(amplitudes: DVector<C64>) -> Result<Self> {
        if amplitudes.len() < 2 {
            return Err(Error::domain("a spin state needs at least two amplitudes"));
        }
        let spin = SpinQuantumNumber::from_twice(amplitudes.len() as u32 - 1)?;
        Self::new(spin, amplitudes)
    }

    /// Used where the caller guarantees unit norm (e.g. after a unitary).
    pub(crate) fn from_normalized(spin: SpinQuantumNumber, amplitudes: DVector<C64>) -> Self {
        debug_assert_eq!(amplitudes.len(), spin.dim());
        Self { spin, amplitudes }
    }

    pub fn spin(&self) -> SpinQuantumNumber {
        self.spin
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> DVector<C64> {
        self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    /// <self|other>
    pub fn inner(&self, other: &SpinState) -> Result<C64> {
        if self.dim() != other.dim() {
            return Err(Error::domain("dimension mismatch in inner product"));
        }
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    /// Multiply by a global phase e^{i phase}.
    pub fn with_global_phase(&self, phase: f64) -> SpinState {
        Self {
            spin: self.spin,
            amplitudes: &self.amplitudes * C64::from_polar(1.0, phase),
        }
    }

    /// Apply a unitary. Dimension must match.
    pub fn apply(&self, unitary: &DMatrix<C64>) -> Result<SpinState> {
        if unitary.ncols() != self.dim() || unitary.nrows() != self.dim() {
            return Err(Error::domain(format!(
                "operator of size {}x{} applied to state of dimension {}",
                unitary.nrows(),
                unitary.ncols(),
                self.dim()
            )));
        }
        Ok(Self::from_normalized(self.spin, unitary * &self.amplitudes))
    }

    /// Bloch vector <J>/j.
    pub fn bloch_vector(&self) -> [f64; 3] {
        let ops = angular_momentum_matrices(self.spin);
        let j = self.spin.j();
        [
            expectation_unchecked(self, &ops.jx.matrix).re / j,
            expectation_unchecked(self, &ops.jy.matrix).re / j,
            expectation_unchecked(self, &ops.jz.matrix).re / j,
        ]
    }
}

/// Basis vector |j,m>.
pub fn dicke_state(spin: SpinQuantumNumber, m: f64) -> Result<SpinState> {
    let k = spin.index_of(m)?;
    Ok(dicke_by_index(spin, k))
}

/// Basis vector with `k` spin flips, i.e. m = j - k.
pub fn dicke_by_index(spin: SpinQuantumNumber, k: usize) -> SpinState {
    let mut v = DVector::<C64>::zeros(spin.dim());
    v[k] = C64::from(1.0);
    SpinState::from_normalized(spin, v)
}

/// Normalize a polar angle into [0, pi]; values outside by more than a
/// rounding slack are rejected.
pub fn normalize_theta(theta: f64) -> Result<f64> {
    if !theta.is_finite() || !(-ANGLE_SLACK..=PI + ANGLE_SLACK).contains(&theta) {
        return Err(Error::domain(format!("theta = {theta} outside [0, pi]")));
    }
    Ok(theta.clamp(0.0, PI))
}

/// Wrap an azimuth into [0, 2pi).
pub fn normalize_phi(phi: f64) -> Result<f64> {
    if !phi.is_finite() {
        return Err(Error::domain(format!("phi = {phi} is not finite")));
    }
    let p = phi.rem_euclid(TAU);
    Ok(if p >= TAU { 0.0 } else { p })
}

/// `ln C(n, k)` for all `k` in `0..=n`.
pub(crate) fn ln_binomials(n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for k in 1..=n {
        acc += ((n - k + 1) as f64).ln() - (k as f64).ln();
        out.push(acc);
    }
    out
}

/// Real magnitudes `sqrt(C(2j,k)) cos(t/2)^(2j-k) sin(t/2)^k` of the
/// coherent-state amplitudes at polar angle `theta`.
pub(crate) fn coherent_magnitudes(spin: SpinQuantumNumber, theta: f64, ln_binom: &[f64]) -> Vec<f64> {
    let n = spin.twice_j() as usize;
    // Exact values at the poles, where cos(pi/2) would otherwise leave ~1e-17.
    let (c, s) = if theta == PI {
        (0.0, 1.0)
    } else {
        ((theta / 2.0).cos(), (theta / 2.0).sin())
    };
    let (lc, ls) = (c.abs().ln(), s.abs().ln());
    (0..=n)
        .map(|k| {
            let up = n - k;
            // powi keeps 0^0 = 1 exact at the poles.
            if c == 0.0 || s == 0.0 {
                (ln_binom[k] / 2.0).exp() * c.powi(up as i32) * s.powi(k as i32)
            } else {
                (ln_binom[k] / 2.0 + up as f64 * lc + k as f64 * ls).exp()
            }
        })
        .collect()
}

/// Spin coherent state pointing along (sin t cos p, sin t sin p, cos t).
///
/// Amplitude on |j, j-k> is `sqrt(C(2j,k)) cos(t/2)^(2j-k) sin(t/2)^k e^{i k p}`.
pub fn coherent_state(spin: SpinQuantumNumber, theta: f64, phi: f64) -> Result<SpinState> {
    let theta = normalize_theta(theta)?;
    let phi = normalize_phi(phi)?;
    let ln_binom = ln_binomials(spin.twice_j() as usize);
    let mags = coherent_magnitudes(spin, theta, &ln_binom);
    let amps = DVector::from_iterator(
        spin.dim(),
        mags.iter()
            .enumerate()
            .map(|(k, &r)| C64::from_polar(r, k as f64 * phi)),
    );
    // Already unit norm analytically; renormalize away rounding.
    SpinState::new(spin, amps)
}

/// exp(-i angle (n . J)) by spectral decomposition of the Hermitian generator.
pub fn rotation_unitary(spin: SpinQuantumNumber, axis: [f64; 3], angle: f64) -> Result<DMatrix<C64>> {
    let norm = axis.iter().map(|a| a * a).sum::<f64>().sqrt();
    if !norm.is_finite() || norm <= 0.0 {
        return Err(Error::domain("rotation axis must be a non-zero finite vector"));
    }
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::domain(format!("rotation axis has norm {norm}, expected 1")));
    }
    if !angle.is_finite() {
        return Err(Error::domain("rotation angle must be finite"));
    }
    let ops = angular_momentum_matrices(spin);
    let generator = ops.along(axis);
    Ok(hermitian_exp(&generator, -angle, Some(spin)))
}

/// exp(i t H) for Hermitian `H`. With `snap_to` set, eigenvalues are snapped
/// to the exact spectrum {-j..j} of a spin component.
pub(crate) fn hermitian_exp(h: &DMatrix<C64>, t: f64, snap_to: Option<SpinQuantumNumber>) -> DMatrix<C64> {
    let eig = SymmetricEigen::new(h.clone());
    let vals: Vec<f64> = eig
        .eigenvalues
        .iter()
        .map(|&l| match snap_to {
            Some(spin) => {
                let shifted = l + spin.j();
                if (shifted - shifted.round()).abs() < 1e-8 {
                    shifted.round() - spin.j()
                } else {
                    l
                }
            }
            None => l,
        })
        .collect();
    let v = &eig.eigenvectors;
    let mut scaled = v.clone();
    for (c, &l) in vals.iter().enumerate() {
        let ph = C64::from_polar(1.0, t * l);
        for r in 0..scaled.nrows() {
            scaled[(r, c)] *= ph;
        }
    }
    scaled * v.adjoint()
}

/// <psi|A|psi>.
pub fn expectation(state: &SpinState, op: &SpinOperator) -> Result<C64> {
    if op.dim() != state.dim() || op.matrix.ncols() != state.dim() {
        return Err(Error::domain(format!(
            "operator dimension {} does not match state dimension {}",
            op.dim(),
            state.dim()
        )));
    }
    Ok(expectation_unchecked(state, &op.matrix))
}

fn expectation_unchecked(state: &SpinState, m: &DMatrix<C64>) -> C64 {
    state.amplitudes.dotc(&(m * &state.amplitudes))
}

/// Max-abs element of a complex matrix.
pub fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// ||U^dagger U - I||_max
pub fn unitarity_error(u: &DMatrix<C64>) -> f64 {
    let n = u.nrows();
    max_abs(&(u.adjoint() * u - DMatrix::<C64>::identity(n, n)))
}

//! Entanglement in the symmetric qubit representation of a spin.
//!
//! A spin j is the permutation-symmetric subspace of N = 2j qubits; the
//! Dicke vector with `k` spin flips is the uniform superposition of all
//! bitstrings with `k` ones. Qubit state |0> is "spin up", so |j,j> is
//! |00...0>.

use nalgebra::{DMatrix, Matrix4, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::floquet::FloquetOperator;
use crate::spin::{ln_binomials, SpinState};
use crate::C64;

/// Eigenvalues below this are treated as zero in entropies.
pub const EIGENVALUE_FLOOR: f64 = 1e-14;

/// Largest qubit count the brute-force marginal will expand.
pub const BRUTE_FORCE_MAX_QUBITS: u32 = 14;

/// Largest `d1 * d2` for Haar sampling.
pub const HAAR_MAX_DIM: usize = 1 << 14;

/// Two-qubit density matrix in the basis |00>, |01>, |10>, |11>.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoQubitRdm {
    pub rho: Matrix4<C64>,
}

impl TwoQubitRdm {
    pub fn trace(&self) -> C64 {
        self.rho.trace()
    }

    pub fn purity(&self) -> f64 {
        self.rho.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn eigenvalues(&self) -> [f64; 4] {
        let e = SymmetricEigen::new(self.rho).eigenvalues;
        [e[0], e[1], e[2], e[3]]
    }

    /// <psi-|rho|psi-> for the singlet (|01> - |10>)/sqrt 2.
    pub fn singlet_weight(&self) -> f64 {
        let r = &self.rho;
        (0.5 * (r[(1, 1)] + r[(2, 2)] - r[(1, 2)] - r[(2, 1)])).re
    }

    /// Largest deviation of SWAP rho SWAP from rho.
    pub fn swap_asymmetry(&self) -> f64 {
        let perm = [0usize, 2, 1, 3];
        let mut worst = 0.0f64;
        for r in 0..4 {
            for c in 0..4 {
                worst = worst.max((self.rho[(perm[r], perm[c])] - self.rho[(r, c)]).norm());
            }
        }
        worst
    }

    pub fn max_abs_diff(&self, other: &TwoQubitRdm) -> f64 {
        (self.rho - other.rho).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

fn qubit_count(state: &SpinState) -> u32 {
    state.spin().twice_j()
}

/// Marginal of any two qubits, in closed form from the Dicke amplitudes.
///
/// Splitting off two qubits with `n` ones leaves a Dicke vector of N-2
/// qubits with `k - n` ones, which gives
/// `rho[x][y] = sum_l c_{l+n(x)} conj(c_{l+n(y)}) C(N-2, l) / sqrt(C(N, l+n(x)) C(N, l+n(y)))`.
pub fn two_qubit_rdm(state: &SpinState) -> Result<TwoQubitRdm> {
    let n = qubit_count(state) as usize;
    if n < 2 {
        return Err(Error::domain(format!("two-qubit marginal needs 2j >= 2, got 2j = {n}")));
    }
    let c = state.amplitudes();
    let ln_full = ln_binomials(n);
    let ln_rest = ln_binomials(n - 2);
    const ONES: [usize; 4] = [0, 1, 1, 2];
    let mut rho = Matrix4::<C64>::zeros();
    for x in 0..4 {
        for y in x..4 {
            let (nx, ny) = (ONES[x], ONES[y]);
            let mut acc = C64::from(0.0);
            for l in 0..=n - 2 {
                let w = (ln_rest[l] - 0.5 * (ln_full[l + nx] + ln_full[l + ny])).exp();
                acc += c[l + nx] * c[l + ny].conj() * w;
            }
            rho[(x, y)] = acc;
            rho[(y, x)] = acc.conj();
        }
    }
    Ok(TwoQubitRdm { rho })
}

/// Reference marginal: expand into all 2^N bitstrings and trace out every
/// qubit except the first two.
pub fn brute_force_two_qubit_rdm(state: &SpinState) -> Result<TwoQubitRdm> {
    brute_force_pair_rdm(state, 0, 1)
}

/// Reference marginal of qubits `(qa, qb)`, in that order.
pub fn brute_force_pair_rdm(state: &SpinState, qa: u32, qb: u32) -> Result<TwoQubitRdm> {
    let n = qubit_count(state);
    if n > BRUTE_FORCE_MAX_QUBITS {
        return Err(Error::Capacity(format!(
            "brute-force expansion limited to {BRUTE_FORCE_MAX_QUBITS} qubits, got {n}"
        )));
    }
    if n < 2 || qa >= n || qb >= n || qa == qb {
        return Err(Error::domain(format!("invalid qubit pair ({qa}, {qb}) for N = {n}")));
    }
    let full = expand_symmetric(state);
    let (ma, mb) = (1usize << qa, 1usize << qb);
    let mut rho = Matrix4::<C64>::zeros();
    for (s, &amp) in full.iter().enumerate() {
        if amp == C64::from(0.0) {
            continue;
        }
        let x = 2 * usize::from(s & ma != 0) + usize::from(s & mb != 0);
        let rest = s & !(ma | mb);
        for y in 0..4 {
            let t = rest | if y & 2 != 0 { ma } else { 0 } | if y & 1 != 0 { mb } else { 0 };
            rho[(x, y)] += amp * full[t].conj();
        }
    }
    Ok(TwoQubitRdm { rho })
}

/// Amplitudes over all 2^N bitstrings (bit q set = qubit q excited).
fn expand_symmetric(state: &SpinState) -> Vec<C64> {
    let n = qubit_count(state);
    let c = state.amplitudes();
    // C(N, k) by Pascal's rule, exact in f64 for N <= 14.
    let mut binom = vec![1.0f64; n as usize + 1];
    for k in 1..=n as usize {
        binom[k] = binom[k - 1] * (n as usize - k + 1) as f64 / k as f64;
    }
    (0..1usize << n)
        .map(|s| {
            let k = s.count_ones() as usize;
            c[k] / binom[k].sqrt()
        })
        .collect()
}

/// 1 - Tr(rho^2).
pub fn linear_entropy(rdm: &TwoQubitRdm) -> f64 {
    1.0 - rdm.purity()
}

/// -Tr(rho ln rho) in nats.
pub fn von_neumann_entropy(rdm: &TwoQubitRdm) -> f64 {
    entropy_of_spectrum(rdm.eigenvalues().iter().copied())
}

/// Von Neumann entropy of an arbitrary Hermitian density matrix.
pub fn von_neumann_entropy_of(rho: &DMatrix<C64>) -> f64 {
    let e = SymmetricEigen::new(rho.clone()).eigenvalues;
    entropy_of_spectrum(e.iter().copied())
}

fn entropy_of_spectrum(values: impl Iterator<Item = f64>) -> f64 {
    let s: f64 = values.filter(|&l| l >= EIGENVALUE_FLOOR).map(|l| -l * l.ln()).sum();
    s.max(0.0)
}

/// Haar average of the entanglement entropy of a d1 x d2 pure state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PageBaseline {
    pub d1: usize,
    pub d2: usize,
    /// Nats.
    pub value: f64,
}

/// Exact Haar mean of the smaller-side entropy,
/// `sum_{k=d2+1}^{d1 d2} 1/k - (d1 - 1) / (2 d2)` for `d2 >= d1`.
///
/// The harmonic sum starts one past the *larger* dimension; with
/// `d1 == d2` this is also `d1 + 1`.
pub fn page_average(d1: usize, d2: usize) -> Result<PageBaseline> {
    check_page_dims(d1, d2, 1)?;
    let harmonic: f64 = (d2 + 1..=d1 * d2).map(|k| 1.0 / k as f64).sum();
    let value = harmonic - (d1 as f64 - 1.0) / (2.0 * d2 as f64);
    Ok(PageBaseline { d1, d2, value })
}

/// Large-dimension form `ln d1 - d1 / (2 d2)`.
pub fn page_large_d_approx(d1: usize, d2: usize) -> Result<f64> {
    check_page_dims(d1, d2, 2)?;
    Ok((d1 as f64).ln() - d1 as f64 / (2.0 * d2 as f64))
}

fn check_page_dims(d1: usize, d2: usize, min_d1: usize) -> Result<()> {
    if d1 < min_d1 {
        return Err(Error::domain(format!("d1 must be at least {min_d1}, got {d1}")));
    }
    if d2 < d1 {
        return Err(Error::domain(format!("need d2 >= d1, got d1 = {d1}, d2 = {d2}")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_samples: usize,
}

/// Per-sample generator: the stream id makes sample `i` independent of how
/// samples are distributed over threads.
pub(crate) fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Monte-Carlo mean of the d1-side entropy of Haar-random d1 x d2 states.
pub fn haar_random_bipartite_entropy(d1: usize, d2: usize, n_samples: usize, seed: u64) -> Result<MonteCarloEstimate> {
    if n_samples < 2 {
        return Err(Error::domain("need at least two samples"));
    }
    if d1 == 0 || d2 == 0 {
        return Err(Error::domain("dimensions must be positive"));
    }
    if d1.saturating_mul(d2) > HAAR_MAX_DIM {
        return Err(Error::Capacity(format!(
            "d1 * d2 = {} exceeds {HAAR_MAX_DIM}",
            d1.saturating_mul(d2)
        )));
    }
    let samples: Vec<f64> = (0..n_samples as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = sample_rng(seed, i);
            let mut gauss = || -> f64 { StandardNormal.sample(&mut rng) };
            let psi = DMatrix::<C64>::from_fn(d1, d2, |_, _| C64::new(gauss(), gauss()));
            let mut rho = &psi * psi.adjoint();
            let tr = rho.trace().re;
            rho /= C64::from(tr);
            von_neumann_entropy_of(&rho)
        })
        .collect();
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok(MonteCarloEstimate {
        mean,
        std_error: (var / n).sqrt(),
        n_samples,
    })
}

/// Linear entropy of the two-qubit marginal at t = 1..=n_kicks.
pub fn entanglement_series(state0: &SpinState, floquet: &FloquetOperator, n_kicks: usize) -> Result<Vec<f64>> {
    if state0.dim() != floquet.dim() {
        return Err(Error::domain("state and Floquet dimensions differ"));
    }
    let mut psi = state0.clone();
    let mut out = Vec::with_capacity(n_kicks);
    for _ in 0..n_kicks {
        psi = psi.apply(floquet.matrix())?;
        out.push(linear_entropy(&two_qubit_rdm(&psi)?));
    }
    Ok(out)
}

/// Mean linear entropy over kicks 1..=n_kicks (the initial state excluded).
pub fn time_averaged_entanglement(state0: &SpinState, floquet: &FloquetOperator, n_kicks: usize) -> Result<f64> {
    if n_kicks == 0 {
        return Err(Error::domain("n_kicks must be at least 1"));
    }
    let series = entanglement_series(state0, floquet, n_kicks)?;
    Ok(series.iter().sum::<f64>() / n_kicks as f64)
}

//! Python bindings for the `kicked_top` library.

use num_complex::Complex64;
use pyo3::exceptions::{PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use kicked_top::classical::{self, LyapunovSettings, PhasePoint, SphereGrid};
use kicked_top::entanglement as ent;
use kicked_top::experiments::{self, Overrides};
use kicked_top::floquet;
use kicked_top::husimi;
use kicked_top::spin::{self, SpinQuantumNumber};
use kicked_top::Error;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Numerical(_) => PyRuntimeError::new_err(e.to_string()),
        Error::Io(_) => PyOSError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

trait IntoPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> IntoPy<T> for Result<T, Error> {
    fn py(self) -> PyResult<T> {
        self.map_err(py_err)
    }
}

fn spin_of(j: f64) -> PyResult<SpinQuantumNumber> {
    SpinQuantumNumber::from_f64(j).py()
}

/// A normalized state in the Dicke basis |j, j>, |j, j-1>, ..., |j, -j>.
#[pyclass(name = "SpinState", module = "kicked_top", frozen)]
struct PySpinState {
    inner: spin::SpinState,
}

#[pymethods]
impl PySpinState {
    /// Build from amplitudes; the vector is normalized.
    #[new]
    fn new(amplitudes: Vec<Complex64>) -> PyResult<Self> {
        let v = nalgebra::DVector::from_vec(amplitudes);
        Ok(Self {
            inner: spin::SpinState::from_amplitudes(v).py()?,
        })
    }

    /// Spin coherent state pointing along (theta, phi).
    #[staticmethod]
    fn coherent(j: f64, theta: f64, phi: f64) -> PyResult<Self> {
        Ok(Self {
            inner: spin::coherent_state(spin_of(j)?, theta, phi).py()?,
        })
    }

    /// Dicke state |j, m>.
    #[staticmethod]
    fn dicke(j: f64, m: f64) -> PyResult<Self> {
        Ok(Self {
            inner: spin::dicke_state(spin_of(j)?, m).py()?,
        })
    }

    #[getter]
    fn j(&self) -> f64 {
        self.inner.spin().j()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn amplitudes(&self) -> Vec<Complex64> {
        self.inner.amplitudes().iter().copied().collect()
    }

    fn norm(&self) -> f64 {
        self.inner.norm()
    }

    /// <J>/j as (x, y, z).
    fn bloch_vector(&self) -> (f64, f64, f64) {
        let b = self.inner.bloch_vector();
        (b[0], b[1], b[2])
    }

    fn __repr__(&self) -> String {
        format!("SpinState(j={}, dim={})", self.inner.spin(), self.inner.dim())
    }
}

/// One kick U = exp(-i kappa Jz^2 / 2j) exp(-i alpha Jy).
#[pyclass(name = "FloquetOperator", module = "kicked_top", frozen)]
struct PyFloquet {
    inner: floquet::FloquetOperator,
}

#[pymethods]
impl PyFloquet {
    #[new]
    fn new(j: f64, alpha: f64, kappa: f64) -> PyResult<Self> {
        Ok(Self {
            inner: floquet::build_floquet(spin_of(j)?, alpha, kappa).py()?,
        })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    /// Row-major matrix as nested lists.
    fn matrix(&self) -> Vec<Vec<Complex64>> {
        let m = self.inner.matrix();
        (0..m.nrows()).map(|r| m.row(r).iter().copied().collect()).collect()
    }

    fn evolve(&self, state: &PySpinState, n_kicks: usize) -> PyResult<PySpinState> {
        Ok(PySpinState {
            inner: floquet::evolve(&state.inner, &self.inner, n_kicks).py()?,
        })
    }

    /// Sorted eigenphases in [0, 2 pi).
    fn eigenphases(&self) -> PyResult<Vec<f64>> {
        Ok(self.inner.eigen().py()?.eigenphases.clone())
    }

    fn eigenvector(&self, k: usize) -> PyResult<PySpinState> {
        let eig = self.inner.eigen().py()?;
        if k >= self.inner.dim() {
            return Err(PyValueError::new_err(format!("index {k} out of range")));
        }
        Ok(PySpinState {
            inner: spin::SpinState::new(self.inner.spin(), eig.eigenvector(k)).py()?,
        })
    }

    fn mean_spacing_ratio(&self) -> PyResult<f64> {
        Ok(floquet::spacing_statistics(&self.inner).py()?.mean_spacing_ratio)
    }

    /// Shannon entropy of the state's eigenbasis populations (nats).
    fn overlap_entropy(&self, state: &PySpinState) -> PyResult<f64> {
        floquet::overlap_entropy(&state.inner, &self.inner).py()
    }

    fn time_averaged_entanglement(&self, state: &PySpinState, n_kicks: usize) -> PyResult<f64> {
        ent::time_averaged_entanglement(&state.inner, &self.inner, n_kicks).py()
    }

    fn entanglement_series(&self, state: &PySpinState, n_kicks: usize) -> PyResult<Vec<f64>> {
        ent::entanglement_series(&state.inner, &self.inner, n_kicks).py()
    }
}

/// 4x4 reduced density matrix of two qubits of the symmetric representation.
#[pyfunction]
fn two_qubit_rdm(state: &PySpinState) -> PyResult<Vec<Vec<Complex64>>> {
    let rdm = ent::two_qubit_rdm(&state.inner).py()?;
    Ok((0..4).map(|r| (0..4).map(|c| rdm.rho[(r, c)]).collect()).collect())
}

#[pyfunction]
fn linear_entropy(state: &PySpinState) -> PyResult<f64> {
    Ok(ent::linear_entropy(&ent::two_qubit_rdm(&state.inner).py()?))
}

#[pyfunction]
fn von_neumann_entropy(state: &PySpinState) -> PyResult<f64> {
    Ok(ent::von_neumann_entropy(&ent::two_qubit_rdm(&state.inner).py()?))
}

#[pyfunction]
fn page_average(d1: usize, d2: usize) -> PyResult<f64> {
    Ok(ent::page_average(d1, d2).py()?.value)
}

#[pyfunction]
fn page_large_d_approx(d1: usize, d2: usize) -> PyResult<f64> {
    ent::page_large_d_approx(d1, d2).py()
}

/// Returns (mean, standard error).
#[pyfunction]
#[pyo3(signature = (d1, d2, n_samples, seed=0))]
fn haar_random_bipartite_entropy(d1: usize, d2: usize, n_samples: usize, seed: u64) -> PyResult<(f64, f64)> {
    let est = ent::haar_random_bipartite_entropy(d1, d2, n_samples, seed).py()?;
    Ok((est.mean, est.std_error))
}

/// One step of the classical map; returns (theta, phi).
#[pyfunction]
fn classical_step(theta: f64, phi: f64, alpha: f64, kappa: f64) -> PyResult<(f64, f64)> {
    let p = classical::classical_step(&PhasePoint::new(theta, phi).py()?, alpha, kappa);
    Ok((p.theta, p.phi))
}

#[pyfunction]
#[pyo3(signature = (theta, phi, alpha, kappa, n_iter=500, transient=100, seed=0))]
fn lyapunov_exponent(
    theta: f64,
    phi: f64,
    alpha: f64,
    kappa: f64,
    n_iter: usize,
    transient: usize,
    seed: u64,
) -> PyResult<f64> {
    let settings = LyapunovSettings {
        n_iter,
        transient,
        seed,
        ..LyapunovSettings::default()
    };
    Ok(
        classical::lyapunov_exponent(&PhasePoint::new(theta, phi).py()?, alpha, kappa, &settings, 0)
            .py()?
            .lambda,
    )
}

/// Per-cell (theta, phi, lambda, label) over an equal-area grid, row-major.
#[pyfunction]
#[pyo3(signature = (alpha, kappa, n_theta, n_phi, threshold=0.05, n_iter=500, seed=0))]
fn classify_grid(
    alpha: f64,
    kappa: f64,
    n_theta: usize,
    n_phi: usize,
    threshold: f64,
    n_iter: usize,
    seed: u64,
) -> PyResult<Vec<(f64, f64, f64, &'static str)>> {
    let settings = LyapunovSettings {
        n_iter,
        threshold,
        seed,
        ..LyapunovSettings::default()
    };
    let class = classical::classify_grid(alpha, kappa, SphereGrid::new(n_theta, n_phi).py()?, &settings).py()?;
    Ok(class
        .points
        .iter()
        .map(|p| (p.point.theta, p.point.phi, p.lambda, p.label.as_str()))
        .collect())
}

/// Husimi function on an equal-area grid: rows are theta bands from 0 to
/// pi, columns phi from 0 to 2 pi.
#[pyfunction]
#[pyo3(signature = (state, n_theta=128, n_phi=256))]
fn husimi_grid(state: &PySpinState, n_theta: usize, n_phi: usize) -> PyResult<Vec<Vec<f64>>> {
    let q = husimi::husimi_grid(&state.inner, n_theta, n_phi).py()?;
    Ok((0..n_theta).map(|i| q.row(i).to_vec()).collect())
}

/// Run an experiment from `key = value` config text and write its outputs
/// to `out_dir`. Returns the manifest as a JSON string.
#[pyfunction]
#[pyo3(signature = (experiment, out_dir, config_text=""))]
fn run_experiment(py: Python<'_>, experiment: &str, out_dir: &str, config_text: &str) -> PyResult<String> {
    let overrides = Overrides {
        experiment: Some(experiment.parse().py()?),
        output_dir: Some(out_dir.to_string()),
        ..Overrides::default()
    };
    let cfg = experiments::parse_config(config_text, &overrides).py()?;
    let manifest = py
        .detach(|| experiments::run_experiment(&cfg, std::path::Path::new(out_dir)))
        .py()?;
    serde_json::to_string_pretty(&manifest).map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

#[pymodule(name = "kicked_top")]
fn kicked_top_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySpinState>()?;
    m.add_class::<PyFloquet>()?;
    m.add_function(wrap_pyfunction!(two_qubit_rdm, m)?)?;
    m.add_function(wrap_pyfunction!(linear_entropy, m)?)?;
    m.add_function(wrap_pyfunction!(von_neumann_entropy, m)?)?;
    m.add_function(wrap_pyfunction!(page_average, m)?)?;
    m.add_function(wrap_pyfunction!(page_large_d_approx, m)?)?;
    m.add_function(wrap_pyfunction!(haar_random_bipartite_entropy, m)?)?;
    m.add_function(wrap_pyfunction!(classical_step, m)?)?;
    m.add_function(wrap_pyfunction!(lyapunov_exponent, m)?)?;
    m.add_function(wrap_pyfunction!(classify_grid, m)?)?;
    m.add_function(wrap_pyfunction!(husimi_grid, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}

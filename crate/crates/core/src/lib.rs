//! Quantum and classical kicked top.
//!
//! The crate is organized bottom-up:
//!
//! * [`spin`]: spin-j operators, Dicke basis, coherent states and rotations.
//! * [`floquet`]: the kicked-top Floquet operator, evolution and spectral diagnostics.
//! * [`entanglement`]: two-qubit marginals of the symmetric qubit representation,
//!   linear / von Neumann entropies and the Haar (Page) baseline.
//! * [`classical`]: the classical map on the sphere, Lyapunov exponents and
//!   regular/chaotic classification.
//! * [`husimi`]: Husimi Q-function grids and scalar summaries.
//! * [`experiments`]: configuration, reproducible runs and file outputs.

pub mod classical;
pub mod entanglement;
pub mod error;
pub mod experiments;
pub mod floquet;
pub mod husimi;
pub mod spin;

pub use error::{Error, Result};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;

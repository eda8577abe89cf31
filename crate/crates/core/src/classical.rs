//! Classical kicked top on the unit sphere.
//!
//! One kick rotates about y by `alpha`, then twists about z by the angle
//! `kappa * Z`. This is the large-j limit of [`crate::floquet`].

use nalgebra::{Matrix3, Vector3};
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

use crate::entanglement::sample_rng;
use crate::error::{Error, Result};
use crate::spin::{normalize_phi, normalize_theta};

/// A direction on the unit sphere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub theta: f64,
    pub phi: f64,
}

impl PhasePoint {
    pub fn new(theta: f64, phi: f64) -> Result<Self> {
        Ok(Self {
            theta: normalize_theta(theta)?,
            phi: normalize_phi(phi)?,
        })
    }

    pub fn cartesian(&self) -> Vector3<f64> {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        Vector3::new(st * cp, st * sp, ct)
    }

    /// From a non-zero Cartesian vector (normalized first).
    pub fn from_cartesian(v: &Vector3<f64>) -> Self {
        let u = v.normalize();
        let theta = u.z.clamp(-1.0, 1.0).acos();
        let phi = u.y.atan2(u.x).rem_euclid(TAU);
        Self {
            theta,
            phi: if phi >= TAU { 0.0 } else { phi },
        }
    }
}

fn rotation_y(alpha: f64) -> Matrix3<f64> {
    let (s, c) = alpha.sin_cos();
    Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c)
}

/// One kick in Cartesian coordinates.
pub fn step_cartesian(v: &Vector3<f64>, alpha: f64, kappa: f64) -> Vector3<f64> {
    let r = rotation_y(alpha) * v;
    let (s, c) = (kappa * r.z).sin_cos();
    Vector3::new(r.x * c - r.y * s, r.x * s + r.y * c, r.z)
}

pub fn classical_step(p: &PhasePoint, alpha: f64, kappa: f64) -> PhasePoint {
    PhasePoint::from_cartesian(&step_cartesian(&p.cartesian(), alpha, kappa))
}

/// Derivative of [`step_cartesian`] with respect to the Cartesian input.
pub fn tangent_jacobian_cartesian(v: &Vector3<f64>, alpha: f64, kappa: f64) -> Matrix3<f64> {
    let rot = rotation_y(alpha);
    let r = rot * v;
    let (s, c) = (kappa * r.z).sin_cos();
    let xo = r.x * c - r.y * s;
    let yo = r.x * s + r.y * c;
    let twist = Matrix3::new(c, -s, -kappa * yo, s, c, kappa * xo, 0.0, 0.0, 1.0);
    twist * rot
}

pub fn tangent_jacobian(p: &PhasePoint, alpha: f64, kappa: f64) -> Matrix3<f64> {
    tangent_jacobian_cartesian(&p.cartesian(), alpha, kappa)
}

/// Orthonormal basis of the tangent plane at unit vector `v`.
pub fn tangent_basis(v: &Vector3<f64>) -> (Vector3<f64>, Vector3<f64>) {
    let helper = if v.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
    let e1 = (helper - v * v.dot(&helper)).normalize();
    let e2 = v.cross(&e1);
    (e1, e2)
}

/// Settings for the maximal Lyapunov exponent and the chaos threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LyapunovSettings {
    pub n_iter: usize,
    pub transient: usize,
    /// Points with exponent above this are labelled chaotic.
    pub threshold: f64,
    pub seed: u64,
}

impl Default for LyapunovSettings {
    fn default() -> Self {
        Self {
            n_iter: 500,
            transient: 100,
            threshold: 0.05,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LyapunovResult {
    /// Per-kick exponent.
    pub lambda: f64,
    pub n_iterations: usize,
    pub transient: usize,
}

/// Maximal Lyapunov exponent from the tangent map. `stream` selects the
/// random initial tangent vector together with `settings.seed`.
pub fn lyapunov_exponent(
    p0: &PhasePoint,
    alpha: f64,
    kappa: f64,
    settings: &LyapunovSettings,
    stream: u64,
) -> Result<LyapunovResult> {
    if settings.n_iter < 100 {
        return Err(Error::domain(format!(
            "n_iter must be at least 100, got {}",
            settings.n_iter
        )));
    }
    let mut v = p0.cartesian();
    for _ in 0..settings.transient {
        v = step_cartesian(&v, alpha, kappa).normalize();
    }
    let mut rng = sample_rng(settings.seed, stream);
    let (e1, e2) = tangent_basis(&v);
    let a: f64 = StandardNormal.sample(&mut rng);
    let b: f64 = StandardNormal.sample(&mut rng);
    let mut t = (e1 * a + e2 * b).normalize();

    let mut sum = 0.0;
    for _ in 0..settings.n_iter {
        let jac = tangent_jacobian_cartesian(&v, alpha, kappa);
        let next = step_cartesian(&v, alpha, kappa).normalize();
        let mut tn = jac * t;
        tn -= next * next.dot(&tn);
        let g = tn.norm();
        sum += g.ln();
        t = tn / g;
        v = next;
    }
    Ok(LyapunovResult {
        lambda: sum / settings.n_iter as f64,
        n_iterations: settings.n_iter,
        transient: settings.transient,
    })
}

/// Equal-area grid on the sphere: rows uniform in cos(theta) running from
/// the north pole down, columns uniform in phi. Both use cell centres.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SphereGrid {
    pub n_theta: usize,
    pub n_phi: usize,
}

impl SphereGrid {
    pub fn new(n_theta: usize, n_phi: usize) -> Result<Self> {
        if n_theta < 2 || n_phi < 2 {
            return Err(Error::domain(format!(
                "grid needs at least 2x2 cells, got {n_theta}x{n_phi}"
            )));
        }
        Ok(Self { n_theta, n_phi })
    }

    pub fn len(&self) -> usize {
        self.n_theta * self.n_phi
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// cos(theta) of row `i`'s centre.
    pub fn cos_theta(&self, i: usize) -> f64 {
        1.0 - 2.0 * (i as f64 + 0.5) / self.n_theta as f64
    }

    pub fn theta(&self, i: usize) -> f64 {
        self.cos_theta(i).acos()
    }

    pub fn phi(&self, k: usize) -> f64 {
        TAU * (k as f64 + 0.5) / self.n_phi as f64
    }

    pub fn point(&self, i: usize, k: usize) -> PhasePoint {
        PhasePoint {
            theta: self.theta(i),
            phi: self.phi(k),
        }
    }

    pub fn cell_area(&self) -> f64 {
        4.0 * PI / self.len() as f64
    }

    /// Row-major index.
    pub fn index(&self, i: usize, k: usize) -> usize {
        i * self.n_phi + k
    }

    /// Cell containing the direction (theta, phi).
    pub fn cell_of(&self, theta: f64, phi: f64) -> (usize, usize) {
        let z = theta.cos();
        let i = (((1.0 - z) / 2.0) * self.n_theta as f64).floor() as usize;
        let k = ((phi.rem_euclid(TAU) / TAU) * self.n_phi as f64).floor() as usize;
        (i.min(self.n_theta - 1), k.min(self.n_phi - 1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Regular,
    Chaotic,
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::Regular => "regular",
            Regime::Chaotic => "chaotic",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassifiedPoint {
    pub point: PhasePoint,
    pub lambda: f64,
    pub label: Regime,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseClassification {
    pub grid: SphereGrid,
    pub threshold: f64,
    /// Row-major over the grid.
    pub points: Vec<ClassifiedPoint>,
}

impl PhaseClassification {
    pub fn chaotic_fraction(&self) -> f64 {
        self.points
            .iter()
            .filter(|p| p.label == Regime::Chaotic)
            .map(|p| p.weight)
            .sum()
    }

    pub fn label_at(&self, i: usize, k: usize) -> Regime {
        self.points[self.grid.index(i, k)].label
    }

    /// Label of the cell containing (theta, phi).
    pub fn label_near(&self, theta: f64, phi: f64) -> Regime {
        let (i, k) = self.grid.cell_of(theta, phi);
        self.label_at(i, k)
    }

    /// Relabel with another threshold without recomputing exponents.
    pub fn with_threshold(&self, threshold: f64) -> PhaseClassification {
        let points = self
            .points
            .iter()
            .map(|p| ClassifiedPoint {
                label: label_for(p.lambda, threshold),
                ..*p
            })
            .collect();
        PhaseClassification {
            grid: self.grid,
            threshold,
            points,
        }
    }
}

fn label_for(lambda: f64, threshold: f64) -> Regime {
    if lambda > threshold {
        Regime::Chaotic
    } else {
        Regime::Regular
    }
}

/// Lyapunov exponent and label at every cell centre of an equal-area grid.
/// Point `idx` uses random stream `idx`, so results do not depend on threading.
pub fn classify_grid(
    alpha: f64,
    kappa: f64,
    grid: SphereGrid,
    settings: &LyapunovSettings,
) -> Result<PhaseClassification> {
    let weight = 1.0 / grid.len() as f64;
    let points = (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let point = grid.point(idx / grid.n_phi, idx % grid.n_phi);
            let res = lyapunov_exponent(&point, alpha, kappa, settings, idx as u64)?;
            Ok(ClassifiedPoint {
                point,
                lambda: res.lambda,
                label: label_for(res.lambda, settings.threshold),
                weight,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PhaseClassification {
        grid,
        threshold: settings.threshold,
        points,
    })
}

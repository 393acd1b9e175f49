//! Dyadic Green tensors at imaginary frequency ω = iu.
//!
//! For a homogeneous background with refractive index n(iu) and
//! permeability μ(iu) the tensor at separation R = r − r′, R = |R|, is
//!
//! ```text
//! G(r, r′, iu) = μ e^{−x} / (4π R x²) · [ (x² + x + 1) I − (x² + 3x + 3) R̂R̂ ],   x = n u R
//! ```
//!
//! which is real, symmetric in its tensor indices and reciprocal,
//! G(r, r′) = Gᵀ(r′, r). The contact term δ(r − r′)/(3 ε u²) is split off
//! and never evaluated numerically; [`split_delta`] returns the remainder H̄.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::response::MediumModel;
use crate::{Error, Result, Tensor3, Vec3};

/// Separations below this (in units of L₀) are rejected as coincident.
pub const MIN_SEPARATION: f64 = 1e-9;

/// Background medium in which Green tensors are evaluated.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Background {
    #[default]
    Vacuum,
    Bulk(MediumModel),
}

impl Background {
    /// Full Green tensor G(r, r′, iu) for r ≠ r′.
    pub fn green(&self, r: &Vec3, r_prime: &Vec3, u: f64) -> Result<Tensor3> {
        match self {
            Background::Vacuum => green_vacuum(r, r_prime, u),
            Background::Bulk(m) => green_bulk(r, r_prime, u, m),
        }
    }

    /// (wave number κ = n u, overall factor μ) at frequency u.
    #[inline]
    pub(crate) fn propagation(&self, u: f64) -> (f64, f64) {
        match self {
            Background::Vacuum => (u, 1.0),
            Background::Bulk(m) => (m.refractive_index(u) * u, m.mu(u)),
        }
    }

    /// Coefficient of δ(r − r′) I in G at frequency u: 1/(3 ε(iu) u²).
    pub fn delta_coefficient(&self, u: f64) -> f64 {
        let eps = match self {
            Background::Vacuum => 1.0,
            Background::Bulk(m) => m.eps(u),
        };
        1.0 / (3.0 * eps * u * u)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Background::Vacuum => Ok(()),
            Background::Bulk(m) => m.validate(),
        }
    }

    pub fn is_vacuum(&self) -> bool {
        match self {
            Background::Vacuum => true,
            Background::Bulk(m) => m.is_vacuum(),
        }
    }
}

/// Scalar coefficients (a, b) with G = a I + b R̂R̂ for separation `dist`.
#[inline]
pub(crate) fn green_coefficients(dist: f64, kappa: f64, mu: f64) -> (f64, f64) {
    let x = kappa * dist;
    let pref = mu * (-x).exp() / (4.0 * PI * dist * x * x);
    (pref * (x * x + x + 1.0), -pref * (x * x + 3.0 * x + 3.0))
}

fn checked_separation(r: &Vec3, r_prime: &Vec3, u: f64) -> Result<(f64, Vec3)> {
    if !(u > 0.0 && u.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "Green tensor needs a positive imaginary frequency, got {u}"
        )));
    }
    let sep = r - r_prime;
    let dist = sep.norm();
    if !dist.is_finite() {
        return Err(Error::InvalidInput("non-finite position".into()));
    }
    if dist < MIN_SEPARATION {
        return Err(Error::CoincidentPoints(dist));
    }
    Ok((dist, sep / dist))
}

#[inline]
pub(crate) fn assemble(a: f64, b: f64, unit: &Vec3) -> Tensor3 {
    Tensor3::from_diagonal_element(a) + unit * unit.transpose() * b
}

fn homogeneous(r: &Vec3, r_prime: &Vec3, u: f64, kappa: f64, mu: f64) -> Result<Tensor3> {
    let (dist, unit) = checked_separation(r, r_prime, u)?;
    let (a, b) = green_coefficients(dist, kappa, mu);
    Ok(assemble(a, b, &unit))
}

/// Free-space Green tensor G⁽⁰⁾(r, r′, iu).
pub fn green_vacuum(r: &Vec3, r_prime: &Vec3, u: f64) -> Result<Tensor3> {
    homogeneous(r, r_prime, u, u, 1.0)
}

/// Green tensor of an unbounded homogeneous magnetodielectric medium.
pub fn green_bulk(r: &Vec3, r_prime: &Vec3, u: f64, medium: &MediumModel) -> Result<Tensor3> {
    let n = medium.refractive_index(u);
    homogeneous(r, r_prime, u, n * u, medium.mu(u))
}

/// Green tensor with the contact δ-term removed, H̄(r, r′, iu).
///
/// Off the diagonal the δ-term vanishes, so this equals the full tensor;
/// at coincident points H̄ diverges in a homogeneous background and the
/// call fails with [`Error::CoincidentPoints`].
pub fn split_delta(background: &Background, r: &Vec3, r_prime: &Vec3, u: f64) -> Result<Tensor3> {
    background.green(r, r_prime, u)
}

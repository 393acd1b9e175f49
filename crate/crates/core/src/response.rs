//! Scalar response functions on the imaginary frequency axis.
//!
//! Every function here takes an imaginary frequency `u ≥ 0` (ω = iu) and
//! returns a real number. On this axis causal response functions are real,
//! positive and monotonically decreasing, which is what all the dispersion
//! integrals downstream rely on.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::{Error, Result, Vec3};

/// One transition of an atom: frequency ω_k > 0 and squared dipole
/// matrix element |d^{0k}|² ≥ 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Oscillator {
    pub omega: f64,
    pub d2: f64,
}

/// Isotropic ground-state atom described by a finite oscillator sum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomSpecies {
    #[serde(default)]
    pub name: String,
    pub oscillators: Vec<Oscillator>,
}

impl AtomSpecies {
    pub fn new(name: impl Into<String>, oscillators: Vec<Oscillator>) -> Result<Self> {
        let species = Self {
            name: name.into(),
            oscillators,
        };
        species.validate()?;
        Ok(species)
    }

    /// Single-transition atom.
    pub fn single(name: impl Into<String>, omega: f64, d2: f64) -> Result<Self> {
        Self::new(name, vec![Oscillator { omega, d2 }])
    }

    /// Single-transition atom with a prescribed static polarizability α(0).
    pub fn with_static_polarizability(name: impl Into<String>, omega: f64, alpha0: f64) -> Result<Self> {
        Self::single(name, omega, 1.5 * omega * alpha0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.oscillators.is_empty() {
            return Err(Error::InvalidInput(format!(
                "species '{}' has no oscillators",
                self.name
            )));
        }
        for (k, osc) in self.oscillators.iter().enumerate() {
            if !(osc.omega.is_finite() && osc.omega > 0.0) {
                return Err(Error::InvalidInput(format!(
                    "species '{}' oscillator {k}: omega must be positive",
                    self.name
                )));
            }
            if !(osc.d2.is_finite() && osc.d2 >= 0.0) {
                return Err(Error::InvalidInput(format!(
                    "species '{}' oscillator {k}: d2 must be non-negative",
                    self.name
                )));
            }
        }
        Ok(())
    }

    /// α(iu) = (2/3) Σ_k ω_k |d_k|² / (ω_k² + u²). No argument checks.
    #[inline]
    pub fn alpha(&self, u: f64) -> f64 {
        let u2 = u * u;
        let sum: f64 = self
            .oscillators
            .iter()
            .map(|o| o.omega * o.d2 / (o.omega * o.omega + u2))
            .sum();
        2.0 / 3.0 * sum
    }

    pub fn static_polarizability(&self) -> f64 {
        self.alpha(0.0)
    }

    /// Smallest transition frequency.
    pub fn lowest_frequency(&self) -> f64 {
        self.oscillators
            .iter()
            .map(|o| o.omega)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Atomic polarizability α(iu) of an isotropic ground-state atom.
pub fn polarizability(species: &AtomSpecies, u: f64) -> Result<f64> {
    check_frequency(u)?;
    species.validate()?;
    Ok(species.alpha(u))
}

fn check_frequency(u: f64) -> Result<()> {
    if u.is_nan() || u < 0.0 {
        return Err(Error::InvalidInput(format!(
            "imaginary frequency must be non-negative, got {u}"
        )));
    }
    Ok(())
}

/// Lorentz oscillator term ω_p² / (ω_T² + γu + u²) on the imaginary axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LorentzTerm {
    pub omega_p: f64,
    pub omega_t: f64,
    #[serde(default)]
    pub gamma: f64,
}

impl LorentzTerm {
    #[inline]
    fn eval(&self, u: f64) -> f64 {
        self.omega_p * self.omega_p / (self.omega_t * self.omega_t + self.gamma * u + u * u)
    }
}

/// Homogeneous medium with Drude-Lorentz ε(iu) and μ(iu).
/// An empty `mu` list means μ ≡ 1.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MediumModel {
    #[serde(default)]
    pub eps: Vec<LorentzTerm>,
    #[serde(default)]
    pub mu: Vec<LorentzTerm>,
}

impl MediumModel {
    pub fn vacuum() -> Self {
        Self::default()
    }

    /// Single-resonance dielectric, μ = 1.
    pub fn dielectric(omega_p: f64, omega_t: f64, gamma: f64) -> Self {
        Self {
            eps: vec![LorentzTerm {
                omega_p,
                omega_t,
                gamma,
            }],
            mu: Vec::new(),
        }
    }

    /// Single-resonance magnetic medium, ε = 1.
    pub fn magnetic(omega_p: f64, omega_t: f64, gamma: f64) -> Self {
        Self {
            eps: Vec::new(),
            mu: vec![LorentzTerm {
                omega_p,
                omega_t,
                gamma,
            }],
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (kind, terms) in [("eps", &self.eps), ("mu", &self.mu)] {
            for (k, t) in terms.iter().enumerate() {
                let ok = t.omega_p.is_finite()
                    && t.omega_t.is_finite()
                    && t.omega_t > 0.0
                    && t.gamma.is_finite()
                    && t.gamma >= 0.0;
                if !ok {
                    return Err(Error::InvalidInput(format!(
                        "medium {kind} term {k}: need omega_t > 0, gamma >= 0 and finite omega_p"
                    )));
                }
            }
        }
        Ok(())
    }

    #[inline]
    pub fn eps(&self, u: f64) -> f64 {
        1.0 + self.eps.iter().map(|t| t.eval(u)).sum::<f64>()
    }

    #[inline]
    pub fn mu(&self, u: f64) -> f64 {
        1.0 + self.mu.iter().map(|t| t.eval(u)).sum::<f64>()
    }

    /// n(iu) = √(ε μ).
    #[inline]
    pub fn refractive_index(&self, u: f64) -> f64 {
        (self.eps(u) * self.mu(u)).sqrt()
    }

    pub fn is_vacuum(&self) -> bool {
        self.eps.iter().chain(&self.mu).all(|t| t.omega_p == 0.0)
    }

    /// Smallest resonance frequency, `None` for an oscillator-free medium.
    pub fn lowest_frequency(&self) -> Option<f64> {
        self.eps
            .iter()
            .chain(&self.mu)
            .filter(|t| t.omega_p != 0.0)
            .map(|t| t.omega_t)
            .reduce(f64::min)
    }
}

pub fn permittivity(model: &MediumModel, u: f64) -> Result<f64> {
    check_frequency(u)?;
    Ok(model.eps(u))
}

pub fn permeability(model: &MediumModel, u: f64) -> Result<f64> {
    check_frequency(u)?;
    Ok(model.mu(u))
}

/// One atomic species of a body with its number density. For point-cloud
/// bodies the density multiplies each point's weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constituent {
    pub species: AtomSpecies,
    pub density: f64,
}

/// Σ_B n_B α_B(iu); equal to Σ n α / ε₀ in natural units.
pub fn density_polarizability(composition: &[Constituent], u: f64) -> f64 {
    composition
        .iter()
        .map(|c| c.density * c.species.alpha(u))
        .sum()
}

/// Clausius-Mosotti denominator argument s = Σ n α(iu) / 3 after checking
/// that the static value stays below one.
fn local_field_ratio(composition: &[Constituent], u: f64) -> Result<f64> {
    check_frequency(u)?;
    let s0 = density_polarizability(composition, 0.0) / 3.0;
    if s0 >= 1.0 {
        return Err(Error::DenominatorViolation(s0));
    }
    Ok(density_polarizability(composition, u) / 3.0)
}

/// Macroscopic susceptibility χ(iu) = Σnα / (1 − Σnα/3).
pub fn clausius_mosotti(composition: &[Constituent], u: f64) -> Result<f64> {
    let s = local_field_ratio(composition, u)?;
    Ok(3.0 * s / (1.0 - s))
}

/// Local-field factor q(iu) = −(Σnα/3) / (1 − Σnα/3).
pub fn q_factor(composition: &[Constituent], u: f64) -> Result<f64> {
    let s = local_field_ratio(composition, u)?;
    Ok(-s / (1.0 - s))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceCheck {
    pub passes: bool,
    /// (2/3) Σ n α(0).
    pub value: f64,
    pub margin: f64,
}

/// Convergence gate of the microscopic expansion: (2/3) Σ n α(0) < 1.
pub fn check_convergence(composition: &[Constituent]) -> ConvergenceCheck {
    let value = 2.0 / 3.0 * density_polarizability(composition, 0.0);
    ConvergenceCheck {
        passes: value < 1.0,
        value,
        margin: 1.0 - value,
    }
}

/// Ratio above the packing bound below which a body is flagged as marginal.
pub const PACKING_MARGINAL_BAND: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PackingStatus {
    /// V_s / V_A with V_s = 1/Σn and V_A = 4π a_B³/3.
    pub vs_over_va: f64,
    /// 8f/3.
    pub threshold: f64,
    pub satisfied: bool,
    pub marginal: bool,
}

/// Atomic packing estimate: the microscopic expansion needs the volume per
/// atom V_s to exceed roughly 8 f V_A / 3.
pub fn packing_diagnostic(composition: &[Constituent], f: f64, bohr_radius: f64) -> Result<PackingStatus> {
    if !(f > 1.0 && f.is_finite()) {
        return Err(Error::InvalidInput(format!("species factor must exceed 1, got {f}")));
    }
    if !(bohr_radius > 0.0 && bohr_radius.is_finite()) {
        return Err(Error::InvalidInput("Bohr radius must be positive".into()));
    }
    let total: f64 = composition.iter().map(|c| c.density).sum();
    if composition.iter().any(|c| c.density < 0.0) {
        return Err(Error::InvalidInput("densities must be non-negative".into()));
    }
    let threshold = 8.0 * f / 3.0;
    if total == 0.0 {
        return Ok(PackingStatus {
            vs_over_va: f64::INFINITY,
            threshold,
            satisfied: true,
            marginal: false,
        });
    }
    let va = 4.0 * PI * bohr_radius.powi(3) / 3.0;
    let ratio = 1.0 / (total * va);
    // one part in 1e12 of slack so a ratio constructed exactly at the bound counts as satisfied
    let satisfied = ratio >= threshold * (1.0 - 1e-12);
    Ok(PackingStatus {
        vs_over_va: ratio,
        threshold,
        satisfied,
        marginal: satisfied && ratio < threshold * (1.0 + PACKING_MARGINAL_BAND),
    })
}

/// Electric and magnetic polarizabilities of a small homogeneous sphere,
/// α_e = 4πR³ (ε−1)/(ε+2) and α_m = 4πR³ (μ−1)/(μ+2).
pub fn sphere_polarizabilities(radius: f64, medium: &MediumModel, u: f64) -> Result<(f64, f64)> {
    check_frequency(u)?;
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::InvalidInput(format!("sphere radius must be positive, got {radius}")));
    }
    Ok(sphere_polarizabilities_unchecked(radius, medium, u))
}

#[inline]
pub(crate) fn sphere_polarizabilities_unchecked(radius: f64, medium: &MediumModel, u: f64) -> (f64, f64) {
    let volume_factor = 4.0 * PI * radius.powi(3);
    (
        volume_factor * clausius_ratio(medium.eps(u)),
        volume_factor * clausius_ratio(medium.mu(u)),
    )
}

/// (x − 1)/(x + 2), written so that x = ∞ gives 1.
#[inline]
pub(crate) fn clausius_ratio(x: f64) -> f64 {
    1.0 - 3.0 / (x + 2.0)
}

/// Shape of a dielectric body.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Geometry {
    Sphere { center: Vec3, radius: f64 },
    Box { corner: Vec3, extents: Vec3 },
    /// Discrete points; `weights` default to one (one atom per unit density).
    PointCloud {
        points: Vec<Vec3>,
        #[serde(default)]
        weights: Option<Vec<f64>>,
    },
}

impl Geometry {
    pub fn validate(&self) -> Result<()> {
        match self {
            Geometry::Sphere { center, radius } => {
                if !(radius.is_finite() && *radius > 0.0) || !finite_vec(center) {
                    return Err(Error::InvalidInput("sphere needs a positive radius".into()));
                }
            }
            Geometry::Box { corner, extents } => {
                if !finite_vec(corner) || extents.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
                    return Err(Error::InvalidInput("box extents must be positive".into()));
                }
            }
            Geometry::PointCloud { points, weights } => {
                if points.is_empty() {
                    return Err(Error::InvalidInput("point cloud is empty".into()));
                }
                if let Some(w) = weights {
                    if w.len() != points.len() {
                        return Err(Error::InvalidInput(
                            "point cloud weights and points differ in length".into(),
                        ));
                    }
                    if w.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
                        return Err(Error::InvalidInput("point weights must be non-negative".into()));
                    }
                }
                for (i, p) in points.iter().enumerate() {
                    if !finite_vec(p) {
                        return Err(Error::InvalidInput(format!("point {i} is not finite")));
                    }
                    for q in &points[..i] {
                        if (p - q).norm() == 0.0 {
                            return Err(Error::InvalidInput(format!(
                                "point cloud position {i} duplicates an earlier point"
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    pub fn volume(&self) -> Option<f64> {
        match self {
            Geometry::Sphere { radius, .. } => Some(4.0 / 3.0 * PI * radius.powi(3)),
            Geometry::Box { extents, .. } => Some(extents.x * extents.y * extents.z),
            Geometry::PointCloud { .. } => None,
        }
    }

    /// Distance from `r` to the closest point of the body (0 if inside).
    pub fn distance_to(&self, r: &Vec3) -> f64 {
        match self {
            Geometry::Sphere { center, radius } => ((r - center).norm() - radius).max(0.0),
            Geometry::Box { corner, extents } => {
                let mut d2 = 0.0;
                for k in 0..3 {
                    let lo = corner[k];
                    let hi = corner[k] + extents[k];
                    let excess = if r[k] < lo {
                        lo - r[k]
                    } else if r[k] > hi {
                        r[k] - hi
                    } else {
                        0.0
                    };
                    d2 += excess * excess;
                }
                d2.sqrt()
            }
            Geometry::PointCloud { points, .. } => points
                .iter()
                .map(|p| (r - p).norm())
                .fold(f64::INFINITY, f64::min),
        }
    }
}

fn finite_vec(v: &Vec3) -> bool {
    v.iter().all(|x| x.is_finite())
}

/// A dielectric body made of atoms with uniform composition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BodySpec {
    pub geometry: Geometry,
    pub composition: Vec<Constituent>,
}

impl BodySpec {
    pub fn new(geometry: Geometry, composition: Vec<Constituent>) -> Result<Self> {
        let body = Self {
            geometry,
            composition,
        };
        body.validate()?;
        Ok(body)
    }

    pub fn validate(&self) -> Result<()> {
        self.geometry.validate()?;
        for c in &self.composition {
            c.species.validate()?;
            if !(c.density.is_finite() && c.density >= 0.0) {
                return Err(Error::InvalidInput(format!(
                    "density of species '{}' must be non-negative",
                    c.species.name
                )));
            }
        }
        Ok(())
    }

    /// Σ n α(iu) of the composition.
    pub fn density_polarizability(&self, u: f64) -> f64 {
        density_polarizability(&self.composition, u)
    }

    /// Copy with every density multiplied by `factor`.
    pub fn scaled_density(&self, factor: f64) -> Self {
        let mut out = self.clone();
        for c in &mut out.composition {
            c.density *= factor;
        }
        out
    }
}

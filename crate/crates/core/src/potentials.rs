//! Casimir-Polder and van der Waals potentials.
//!
//! Energies are in natural units (ħ c / L₀). Every frequency integral runs
//! through [`integrate_semiaxis`]; closed-form asymptotes are separate
//! functions and are never substituted silently.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::green::{green_coefficients, Background, MIN_SEPARATION};
use crate::perm::perm_class_reps;
use crate::quadrature::{integrate_semiaxis, Estimate, QuadratureSpec};
use crate::response::{sphere_polarizabilities_unchecked, AtomSpecies, MediumModel};
use crate::{Error, Result, Tensor3, Vec3};

/// Above this R/r_A the small-sphere formula is refused.
pub const SPHERE_RATIO_LIMIT: f64 = 0.2;
/// Above this R/r_A a warning is logged.
pub const SPHERE_RATIO_WARN: f64 = 0.1;
/// Largest number of atoms accepted by [`vdw_many_atom`].
pub const MAX_MANY_ATOM: usize = 5;

/// g_ee(x) = 2e^{−2x}(3 + 6x + 5x² + 2x³ + x⁴).
pub fn g_ee(x: f64) -> f64 {
    2.0 * (-2.0 * x).exp() * (3.0 + x * (6.0 + x * (5.0 + x * (2.0 + x))))
}

/// g_em(x) = 2e^{−2x}(1 + x)².
pub fn g_em(x: f64) -> f64 {
    2.0 * (-2.0 * x).exp() * (1.0 + x) * (1.0 + x)
}

/// An atom of a given species at a position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomAt {
    pub species: AtomSpecies,
    pub position: Vec3,
}

impl AtomAt {
    pub fn new(species: AtomSpecies, position: Vec3) -> Self {
        Self { species, position }
    }

    pub fn validate(&self) -> Result<()> {
        self.species.validate()?;
        if self.position.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("atom position is not finite".into()));
        }
        Ok(())
    }
}

/// Small homogeneous sphere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sphere {
    pub center: Vec3,
    pub radius: f64,
    pub medium: MediumModel,
}

impl Sphere {
    pub fn validate(&self) -> Result<()> {
        if !(self.radius.is_finite() && self.radius > 0.0) {
            return Err(Error::InvalidInput("sphere radius must be positive".into()));
        }
        self.medium.validate()
    }

    /// Distance from the sphere centre to `atom`, checked against the
    /// small-sphere limit.
    fn checked_distance(&self, atom: &AtomAt) -> Result<f64> {
        self.validate()?;
        atom.validate()?;
        let r = (atom.position - self.center).norm();
        let ratio = self.radius / r;
        if !(ratio < SPHERE_RATIO_LIMIT) {
            return Err(Error::GeometryViolation(format!(
                "R/r_A = {ratio:.4} is not below {SPHERE_RATIO_LIMIT}"
            )));
        }
        if ratio > SPHERE_RATIO_WARN {
            log::warn!("R/r_A = {ratio:.4}: leading-order sphere formula is marginal");
        }
        Ok(r)
    }
}

/// Distance regime relative to the slowest resonance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Nonretarded,
    Intermediate,
    Retarded,
}

impl Regime {
    /// r ω_char below 0.1 is nonretarded, above 10 retarded.
    pub fn classify(distance: f64, omega_char: f64) -> Self {
        let x = distance * omega_char;
        if x < 0.1 {
            Regime::Nonretarded
        } else if x > 10.0 {
            Regime::Retarded
        } else {
            Regime::Intermediate
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::Nonretarded => "nonretarded",
            Regime::Intermediate => "intermediate",
            Regime::Retarded => "retarded",
        }
    }
}

/// Smallest resonance frequency over atoms and media.
pub fn omega_char<'a>(
    species: impl IntoIterator<Item = &'a AtomSpecies>,
    media: impl IntoIterator<Item = &'a MediumModel>,
) -> f64 {
    let atoms = species.into_iter().map(|s| s.lowest_frequency());
    let bodies = media.into_iter().filter_map(|m| m.lowest_frequency());
    atoms.chain(bodies).fold(f64::INFINITY, f64::min)
}

fn frequency_integral<F: FnMut(f64) -> f64>(f: F, spec: &QuadratureSpec, length: f64) -> Result<Estimate> {
    let spec = spec.or_scale_for(length);
    integrate_semiaxis(f, &spec)
}

/// Leading-order Casimir-Polder potential of an atom near a small
/// magnetodielectric sphere.
pub fn cp_sphere(atom: &AtomAt, sphere: &Sphere, spec: &QuadratureSpec) -> Result<Estimate> {
    let r = sphere.checked_distance(atom)?;
    if sphere.medium.is_vacuum() {
        return Ok(Estimate::exact(0.0));
    }
    let est = frequency_integral(
        |u| {
            let (ae, am) = sphere_polarizabilities_unchecked(sphere.radius, &sphere.medium, u);
            let x = u * r;
            atom.species.alpha(u) * (g_ee(x) * ae - x * x * g_em(x) * am)
        },
        spec,
        r,
    )?;
    Ok(est.scaled(-1.0 / (32.0 * PI.powi(3) * r.powi(6))))
}

/// Nonretarded electric part −(3/16π³r⁶) ∫ α_A α_e du.
pub fn cp_sphere_nonretarded_e(atom: &AtomAt, sphere: &Sphere, spec: &QuadratureSpec) -> Result<Estimate> {
    let r = sphere.checked_distance(atom)?;
    if sphere.medium.eps.is_empty() {
        return Ok(Estimate::exact(0.0));
    }
    let est = frequency_integral(
        |u| atom.species.alpha(u) * sphere_polarizabilities_unchecked(sphere.radius, &sphere.medium, u).0,
        spec,
        r,
    )?;
    Ok(est.scaled(-3.0 / (16.0 * PI.powi(3) * r.powi(6))))
}

/// Nonretarded magnetic part +(1/16π³r⁴) ∫ u² α_A α_m du.
pub fn cp_sphere_nonretarded_m(atom: &AtomAt, sphere: &Sphere, spec: &QuadratureSpec) -> Result<Estimate> {
    let r = sphere.checked_distance(atom)?;
    if sphere.medium.mu.is_empty() {
        return Ok(Estimate::exact(0.0));
    }
    let est = frequency_integral(
        |u| u * u * atom.species.alpha(u) * sphere_polarizabilities_unchecked(sphere.radius, &sphere.medium, u).1,
        spec,
        r,
    )?;
    Ok(est.scaled(1.0 / (16.0 * PI.powi(3) * r.powi(4))))
}

/// Retarded limit −α_A(0)[23 α_e(0) − 7 α_m(0)] / (64π³ r⁷).
pub fn cp_sphere_retarded(atom: &AtomAt, sphere: &Sphere) -> Result<f64> {
    let r = sphere.checked_distance(atom)?;
    let (ae, am) = sphere_polarizabilities_unchecked(sphere.radius, &sphere.medium, 0.0);
    Ok(-atom.species.static_polarizability() * (23.0 * ae - 7.0 * am) / (64.0 * PI.powi(3) * r.powi(7)))
}

fn pair_distance(a: &AtomAt, b: &AtomAt) -> Result<f64> {
    a.validate()?;
    b.validate()?;
    let r = (a.position - b.position).norm();
    if r < MIN_SEPARATION {
        return Err(Error::CoincidentPoints(r));
    }
    Ok(r)
}

/// u⁴ Tr[G(r_A, r_B, iu) G(r_B, r_A, iu)] from the full tensors.
pub fn pair_trace(background: &Background, ra: &Vec3, rb: &Vec3, u: f64) -> Result<f64> {
    let g_ab = background.green(ra, rb, u)?;
    let g_ba = background.green(rb, ra, u)?;
    Ok(u.powi(4) * (g_ab * g_ba).trace())
}

/// Two-atom potential −(1/2π) ∫ u⁴ α_A α_B Tr[G G] du in a vacuum or bulk
/// background.
pub fn vdw_pair_general(a: &AtomAt, b: &AtomAt, background: &Background, spec: &QuadratureSpec) -> Result<Estimate> {
    let r = pair_distance(a, b)?;
    background.validate()?;
    let mut failure = None;
    let est = frequency_integral(
        |u| match pair_trace(background, &a.position, &b.position, u) {
            Ok(t) => a.species.alpha(u) * b.species.alpha(u) * t,
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        },
        spec,
        r,
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(est.scaled(-1.0 / (2.0 * PI)))
}

/// Two atoms embedded in a homogeneous medium:
/// −(1/32π³r⁶) ∫ α_A α_B g_ee(n u r) / ε² du.
pub fn vdw_pair_bulk(a: &AtomAt, b: &AtomAt, medium: &MediumModel, spec: &QuadratureSpec) -> Result<Estimate> {
    let r = pair_distance(a, b)?;
    medium.validate()?;
    let est = frequency_integral(
        |u| {
            let eps = medium.eps(u);
            a.species.alpha(u) * b.species.alpha(u) * g_ee(medium.refractive_index(u) * u * r) / (eps * eps)
        },
        spec,
        r,
    )?;
    Ok(est.scaled(-1.0 / (32.0 * PI.powi(3) * r.powi(6))))
}

/// Nonretarded two-atom limit −(3/16π³r⁶) ∫ α_A α_B / ε² du.
pub fn vdw_pair_nonretarded(a: &AtomAt, b: &AtomAt, medium: &MediumModel, spec: &QuadratureSpec) -> Result<Estimate> {
    let r = pair_distance(a, b)?;
    let est = frequency_integral(
        |u| {
            let eps = medium.eps(u);
            a.species.alpha(u) * b.species.alpha(u) / (eps * eps)
        },
        spec,
        r,
    )?;
    Ok(est.scaled(-3.0 / (16.0 * PI.powi(3) * r.powi(6))))
}

/// Retarded two-atom limit −23 α_A(0) α_B(0) / (64π³ ε(0)² n(0) r⁷).
pub fn vdw_pair_retarded(a: &AtomAt, b: &AtomAt, medium: &MediumModel) -> Result<f64> {
    let r = pair_distance(a, b)?;
    let eps = medium.eps(0.0);
    let n = medium.refractive_index(0.0);
    Ok(-23.0 * a.species.static_polarizability() * b.species.static_polarizability()
        / (64.0 * PI.powi(3) * eps * eps * n * r.powi(7)))
}

/// Tensors H(r_a, r_b) for all ordered pairs, indexed [a][b].
fn pair_tensors(background: &Background, points: &[Vec3], u: f64) -> Result<Vec<Vec<Tensor3>>> {
    let (kappa, mu) = background.propagation(u);
    let j = points.len();
    let mut out = vec![vec![Tensor3::zeros(); j]; j];
    for a in 0..j {
        for b in (a + 1)..j {
            let sep = points[a] - points[b];
            let dist = sep.norm();
            if dist < MIN_SEPARATION {
                return Err(Error::CoincidentPoints(dist));
            }
            let unit = sep / dist;
            let (ca, cb) = green_coefficients(dist, kappa, mu);
            let h = crate::green::assemble(ca, cb, &unit);
            out[a][b] = h;
            out[b][a] = h.transpose();
        }
    }
    Ok(out)
}

fn cyclic_trace(h: &[Vec<Tensor3>], order: &[usize]) -> f64 {
    let j = order.len();
    let mut prod = h[order[0]][order[1]];
    for k in 1..j {
        prod *= h[order[k]][order[(k + 1) % j]];
    }
    prod.trace()
}

/// Tr[H(r_{π1}, r_{π2}) ⋯ H(r_{πj}, r_{π1})] for one ordering π.
pub fn trace_product(background: &Background, points: &[Vec3], order: &[usize], u: f64) -> Result<f64> {
    if order.len() < 2 || order.iter().any(|&i| i >= points.len()) {
        return Err(Error::InvalidInput("ordering must index at least two points".into()));
    }
    let h = pair_tensors(background, points, u)?;
    Ok(cyclic_trace(&h, order))
}

/// Σ over class representatives of the cyclic trace products.
pub fn symmetrized_trace(background: &Background, points: &[Vec3], u: f64) -> Result<f64> {
    let reps = perm_class_reps(points.len())?;
    let h = pair_tensors(background, points, u)?;
    Ok(reps.representatives.iter().map(|p| cyclic_trace(&h, p)).sum())
}

/// j-atom van der Waals potential
/// ((−1)^{j−1} / ((1 + δ_{2j}) π)) ∫ u^{2j} Π α_i Σ_{P̄(j)} Tr[H⋯H] du.
pub fn vdw_many_atom(atoms: &[AtomAt], background: &Background, spec: &QuadratureSpec) -> Result<Estimate> {
    let j = atoms.len();
    if !(2..=MAX_MANY_ATOM).contains(&j) {
        return Err(Error::UnsupportedOrder(j));
    }
    background.validate()?;
    let mut min_dist = f64::INFINITY;
    for (i, a) in atoms.iter().enumerate() {
        for b in &atoms[..i] {
            min_dist = min_dist.min(pair_distance(a, b)?);
        }
    }
    let points: Vec<Vec3> = atoms.iter().map(|a| a.position).collect();
    let reps = perm_class_reps(j)?;
    let mut failure = None;
    let est = frequency_integral(
        |u| {
            let h = match pair_tensors(background, &points, u) {
                Ok(h) => h,
                Err(e) => {
                    failure.get_or_insert(e);
                    return 0.0;
                }
            };
            let alphas: f64 = atoms.iter().map(|a| a.species.alpha(u)).product();
            let traces: f64 = reps.representatives.iter().map(|p| cyclic_trace(&h, p)).sum();
            u.powi(2 * j as i32) * alphas * traces
        },
        spec,
        min_dist,
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    let sign = if j % 2 == 0 { -1.0 } else { 1.0 };
    let delta = if j == 2 { 2.0 } else { 1.0 };
    Ok(est.scaled(sign / (delta * PI)))
}

/// Force −∇U with its error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForceEstimate {
    pub force: Vec3,
    pub error: f64,
}

/// −∇U at `r` by central differences with steps h and h/2 combined by
/// Richardson extrapolation. The error estimate is the size of the
/// Richardson correction.
pub fn force<F: FnMut(&Vec3) -> Result<f64>>(mut potential: F, r: &Vec3, h: f64) -> Result<ForceEstimate> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidInput("finite-difference step must be positive".into()));
    }
    let mut central = |step: f64, axis: usize| -> Result<f64> {
        let mut e = Vec3::zeros();
        e[axis] = step;
        Ok((potential(&(r + e))? - potential(&(r - e))?) / (2.0 * step))
    };
    let mut grad = Vec3::zeros();
    let mut correction = Vec3::zeros();
    for axis in 0..3 {
        let coarse = central(h, axis)?;
        let fine = central(0.5 * h, axis)?;
        grad[axis] = (4.0 * fine - coarse) / 3.0;
        correction[axis] = grad[axis] - fine;
    }
    Ok(ForceEstimate {
        force: -grad,
        error: correction.norm(),
    })
}

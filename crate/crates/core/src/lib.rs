//! Ground-state dispersion potentials from imaginary-frequency response
//! functions and dyadic Green tensors.
//!
//! All internal quantities use natural units with ħ = c = ε₀ = μ₀ = 1.
//! Lengths are measured in a reference length L₀ and frequencies in c/L₀;
//! see [`units`] for the conversion to SI.
//!
//! The crate is organised bottom-up:
//!
//! - [`response`]: atomic polarizabilities, oscillator media,
//!   Clausius-Mosotti susceptibility, q-factor and packing diagnostics.
//! - [`green`]: vacuum and bulk Green tensors at imaginary frequency.
//! - [`quadrature`]: semi-infinite frequency integrals and body volume grids.
//! - [`potentials`]: Casimir-Polder, two-atom and j-atom van der Waals potentials.
//! - [`born`]: Born-series terms of the Casimir-Polder potential, their
//!   microscopic many-atom counterparts and the equivalence verifier.

pub mod born;
pub mod error;
pub mod green;
pub mod perm;
pub mod potentials;
pub mod quadrature;
pub mod response;
pub mod units;

pub use error::{Error, Result};

/// Position in space.
pub type Vec3 = nalgebra::Vector3<f64>;

/// Real 3×3 matrix; a Green tensor evaluated at imaginary frequency.
pub type Tensor3 = nalgebra::Matrix3<f64>;

pub use born::{
    born_term, born_term_l_channel, micro_term, resummation_check, verify_equivalence, BodyKernel,
    Orders, PairRule, Resummation, SeriesReport, Susceptibility, VolumeSpec,
};
pub use green::{green_bulk, green_vacuum, split_delta, Background};
pub use perm::{perm_class_reps, PermClassRep};
pub use potentials::{
    cp_sphere, cp_sphere_nonretarded_e, cp_sphere_nonretarded_m, cp_sphere_retarded, force, g_ee,
    g_em, vdw_many_atom, vdw_pair_bulk, vdw_pair_general, AtomAt, Sphere,
};
pub use quadrature::{integrate_semiaxis, integrate_volume, Estimate, QuadratureSpec, VolumeGrid};
pub use response::{
    check_convergence, clausius_mosotti, packing_diagnostic, permeability, permittivity,
    polarizability, q_factor, sphere_polarizabilities, AtomSpecies, BodySpec, Constituent,
    Geometry, LorentzTerm, MediumModel, Oscillator,
};

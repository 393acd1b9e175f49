//! Conversion between SI and the natural units used internally.
//!
//! Natural units set ħ = c = ε₀ = μ₀ = 1 and measure lengths in a
//! reference length L₀. With that choice
//!
//! | quantity              | SI unit | natural value          |
//! |-----------------------|---------|------------------------|
//! | length                | m       | x / L₀                 |
//! | angular frequency     | rad/s   | ω L₀ / c               |
//! | squared dipole moment | C² m²   | d² / (ε₀ ħ c L₀²)      |
//! | polarizability        | C m²/V  | α / (ε₀ L₀³)           |
//! | number density        | m⁻³     | n L₀³                  |
//! | energy                | J       | E L₀ / (ħ c)           |
//! | force                 | N       | F L₀² / (ħ c)          |
//!
//! Constants are CODATA 2018.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Reduced Planck constant (J s).
pub const HBAR: f64 = 1.054_571_817e-34;
/// Speed of light in vacuum (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// Vacuum permittivity (F/m).
pub const EPSILON_0: f64 = 8.854_187_812_8e-12;
/// Bohr radius (m).
pub const BOHR_RADIUS: f64 = 5.291_772_109_03e-11;

/// SI ↔ natural conversion for a fixed reference length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitScale {
    /// L₀ in metres.
    pub length: f64,
}

impl UnitScale {
    pub fn new(length: f64) -> Result<Self> {
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::InvalidInput("reference length must be positive".into()));
        }
        Ok(Self { length })
    }

    fn energy_unit(&self) -> f64 {
        HBAR * SPEED_OF_LIGHT / self.length
    }

    pub fn length_to_natural(&self, metres: f64) -> f64 {
        metres / self.length
    }

    pub fn length_to_si(&self, x: f64) -> f64 {
        x * self.length
    }

    pub fn frequency_to_natural(&self, omega: f64) -> f64 {
        omega * self.length / SPEED_OF_LIGHT
    }

    pub fn frequency_to_si(&self, u: f64) -> f64 {
        u * SPEED_OF_LIGHT / self.length
    }

    pub fn dipole_squared_to_natural(&self, d2: f64) -> f64 {
        d2 / (EPSILON_0 * HBAR * SPEED_OF_LIGHT * self.length * self.length)
    }

    pub fn polarizability_to_natural(&self, alpha: f64) -> f64 {
        alpha / (EPSILON_0 * self.length.powi(3))
    }

    pub fn polarizability_to_si(&self, alpha: f64) -> f64 {
        alpha * EPSILON_0 * self.length.powi(3)
    }

    pub fn density_to_natural(&self, n: f64) -> f64 {
        n * self.length.powi(3)
    }

    pub fn energy_to_si(&self, e: f64) -> f64 {
        e * self.energy_unit()
    }

    pub fn energy_to_natural(&self, joules: f64) -> f64 {
        joules / self.energy_unit()
    }

    pub fn force_to_si(&self, f: f64) -> f64 {
        f * self.energy_unit() / self.length
    }

    /// Bohr radius in units of L₀.
    pub fn bohr_radius(&self) -> f64 {
        BOHR_RADIUS / self.length
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn round_trips() {
        let s = UnitScale::new(3.7e-9).unwrap();
        assert_relative_eq!(s.length_to_si(s.length_to_natural(1.2e-8)), 1.2e-8, max_relative = 1e-15);
        assert_relative_eq!(s.frequency_to_si(s.frequency_to_natural(4e15)), 4e15, max_relative = 1e-15);
        assert_relative_eq!(s.energy_to_si(s.energy_to_natural(2e-21)), 2e-21, max_relative = 1e-15);
        assert!(UnitScale::new(0.0).is_err());
    }

    #[test]
    fn hydrogen_like_polarizability() {
        // α(0) = 2 d² / (3 ħ ω) evaluated in SI and in natural units agree
        let s = UnitScale::new(BOHR_RADIUS).unwrap();
        let (omega, d2) = (1.6e16, 1.0e-58);
        let alpha_si = 2.0 * d2 / (3.0 * HBAR * omega);
        let alpha_nat = 2.0 * s.dipole_squared_to_natural(d2) / (3.0 * s.frequency_to_natural(omega));
        assert_relative_eq!(s.polarizability_to_natural(alpha_si), alpha_nat, max_relative = 1e-14);
    }
}

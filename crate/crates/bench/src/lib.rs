//! Fixtures shared by the benchmarks.

use casimir_core::{AtomAt, AtomSpecies, BodySpec, Constituent, Geometry, MediumModel, Sphere, Vec3};

pub fn species() -> AtomSpecies {
    AtomSpecies::new(
        "A",
        vec![
            casimir_core::Oscillator { omega: 1.0, d2: 0.8 },
            casimir_core::Oscillator { omega: 2.5, d2: 0.3 },
        ],
    )
    .expect("valid species")
}

pub fn atom(position: Vec3) -> AtomAt {
    AtomAt::new(species(), position)
}

/// Three atoms on a scalene triangle.
pub fn triangle() -> Vec<AtomAt> {
    vec![
        atom(Vec3::zeros()),
        atom(Vec3::new(1.0, 0.0, 0.0)),
        atom(Vec3::new(0.3, 1.4, 0.2)),
    ]
}

pub fn small_sphere() -> Sphere {
    Sphere {
        center: Vec3::zeros(),
        radius: 0.1,
        medium: MediumModel::dielectric(1.3, 1.1, 0.05),
    }
}

/// Unit sphere at Σnα(0) = 0.05, the dilute verification body.
pub fn dilute_body() -> BodySpec {
    let sp = AtomSpecies::with_static_polarizability("B", 1.0, 1.0).expect("valid species");
    BodySpec::new(
        Geometry::Sphere {
            center: Vec3::zeros(),
            radius: 1.0,
        },
        vec![Constituent {
            species: sp,
            density: 0.05,
        }],
    )
    .expect("valid body")
}

use casimir_core::{
    clausius_mosotti, verify_equivalence, AtomAt, AtomSpecies, BodySpec, Constituent, Geometry, Orders, Vec3,
    VolumeSpec,
};

fn species() -> AtomSpecies {
    AtomSpecies::with_static_polarizability("B", 1.0, 1.0).unwrap()
}

fn sphere(s0: f64) -> BodySpec {
    BodySpec::new(
        Geometry::Sphere {
            center: Vec3::zeros(),
            radius: 1.0,
        },
        vec![Constituent {
            species: species(),
            density: s0,
        }],
    )
    .unwrap()
}

fn atom() -> AtomAt {
    AtomAt::new(species(), Vec3::new(0.0, 0.0, 2.0))
}

#[test]
fn dilute_first_order_identification() {
    let spec = VolumeSpec::default().with_grid(8);
    let first = verify_equivalence(&atom(), &sphere(0.05), &spec, Orders { k: 1, l: 1 }, &[8]).unwrap();
    let d = first.refinements[0].first_order_discrepancy.abs();
    assert!(d < 0.02, "first-order discrepancy {d}");
    // halving the density halves the first-order discrepancy
    let half = verify_equivalence(&atom(), &sphere(0.025), &spec, Orders { k: 1, l: 1 }, &[8]).unwrap();
    let ratio = d / half.refinements[0].first_order_discrepancy.abs();
    assert!((ratio - 2.0).abs() < 0.1, "ratio {ratio}");
}

#[test]
fn second_order_improves_moderate_body() {
    let spec = VolumeSpec::default();
    let body = sphere(0.5);
    let report = verify_equivalence(&atom(), &body, &spec, Orders { k: 2, l: 2 }, &[8, 10]).unwrap();
    let row = report.refinements.last().unwrap();
    let chi0 = clausius_mosotti(&body.composition, 0.0).unwrap();
    // each order gains one power of chi
    let gain = row.first_order_discrepancy.abs() / row.discrepancy.abs();
    assert!(gain >= 1.0 / chi0, "gain {gain}");
}

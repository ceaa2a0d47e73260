use super::field::unit_axis;
use super::*;
use crate::nonlinearity::{linspace, registry, BoxDomain, NonlinearitySpec, Zero};
use crate::pde::{FieldBundle, Mesh1D};
use crate::Tolerances;

fn tol() -> Tolerances {
    Tolerances::default()
}

fn g(t: f64) -> f64 {
    ((6.0 * t - 3.0) / std::f64::consts::SQRT_2).tanh()
}

#[test]
fn one_dimensional_input_is_a_fixed_point() {
    let f = BoxField::from_fn(
        vec![linspace(0.0, 1.0, 16)],
        unit_axis(64),
        2,
        |i, _, t| {
            if i == 0 {
                g(t)
            } else {
                -0.5 * g(t)
            }
        },
    )
    .unwrap();
    let spec = registry::build("ac-quadratic", 2).unwrap();
    let r = rectangular_rearrangement(&f, &tol()).unwrap();
    assert_eq!(r.directions, vec![1, -1]);
    for i in 0..2 {
        assert_eq!(r.profile.components[i], f.line(i, 0));
    }
    assert_eq!(equimeasurability_defect(&r), vec![0.0, 0.0]);
    let rep = verify_energy_decrease(&f, &spec, &tol()).unwrap();
    assert!(rep.already_one_dimensional && rep.pass);
    assert_eq!(rep.identity_gap, Some(0.0));
    assert!(rep.dirichlet_decrease.abs() <= 1e-10 && rep.potential_decrease.abs() <= 1e-10);
    assert!(!rep.consistent, "opposite directions with H₁₂ < 0 are inconsistent");
}

#[test]
fn decreasing_component_keeps_its_boundary_values() {
    let mut p = TiltParams::new(2, 3);
    p.base_n = 16;
    p.nv = 48;
    p.directions = vec![1, -1];
    let f = tilted_field(&p).unwrap();
    let r = rectangular_rearrangement(&f, &tol()).unwrap();
    let u2 = &r.profile.components[1];
    let (a2, b2) = f.boundary()[1];
    assert_eq!((u2[0], u2[u2.len() - 1]), (a2, b2));
    assert!(u2.windows(2).all(|w| w[1] <= w[0]));
    assert!(equimeasurability_defect(&r).iter().all(|&d| d == 0.0));
}

#[test]
fn energy_of_simple_fields() {
    let zero = NonlinearitySpec::from_impl(Zero { m: 2 }, BoxDomain::cube(2, -5.0, 5.0).unwrap()).unwrap();
    let lin = BoxField::from_fn(
        vec![linspace(0.0, 2.0, 5)],
        unit_axis(9),
        2,
        |i, _, t| {
            if i == 0 {
                1.0 + 2.0 * t
            } else {
                -t
            }
        },
    )
    .unwrap();
    let e = energy(&lin, &zero).unwrap();
    assert!((e.dirichlet - 0.5 * (4.0 + 1.0) * 2.0).abs() < 1e-12);
    assert_eq!(e.potential, 0.0);

    let spec = registry::build("ac-quadratic", 2).unwrap();
    let c = BoxField::new(
        vec![linspace(0.0, 1.0, 3), linspace(0.0, 3.0, 4)],
        unit_axis(5),
        vec![vec![0.25; 60], vec![-0.5; 60]],
    );
    // Constant fields violate strict monotonicity but not the box-field invariants.
    let c = c.unwrap();
    let e = energy(&c, &spec).unwrap();
    assert_eq!(e.dirichlet, 0.0);
    assert!((e.potential - spec.value(&[0.25, -0.5]).unwrap() * 3.0).abs() < 1e-12);
    assert!((e.total - (e.dirichlet + e.potential)).abs() <= 1e-12 * e.total.abs());
}

#[test]
fn lifted_profile_energy_matches_fine_quadrature() {
    let m = 2;
    let spec = registry::build("ac-quadratic", m).unwrap();
    let mesh = Mesh1D::new(0.0, 1.0, 401).unwrap();
    let fs: Vec<&dyn Fn(f64) -> f64> = vec![&g; m];
    let profile = FieldBundle::from_fn(mesh, &fs).unwrap();
    let e = energy_of_profile(&profile, vec![linspace(0.0, 1.0, 3)], &spec).unwrap();
    // Composite Simpson with the analytic derivative g' = (6/√2)·sech².
    let n = 20_000;
    let f = |t: f64| {
        let d = 6.0 / std::f64::consts::SQRT_2 / ((6.0 * t - 3.0) / std::f64::consts::SQRT_2).cosh().powi(2);
        0.5 * m as f64 * d * d + spec.value(&vec![g(t); m]).unwrap()
    };
    let h = 1.0 / n as f64;
    let s: f64 = (0..=n)
        .map(|k| {
            let w = if k == 0 || k == n {
                1.0
            } else if k % 2 == 1 {
                4.0
            } else {
                2.0
            };
            w * f(k as f64 * h)
        })
        .sum::<f64>()
        * h
        / 3.0;
    assert!((e.total - s).abs() < 1e-4, "{} vs {s}", e.total);
}

#[test]
fn tilted_fields_lose_energy() {
    let spec = registry::build("ac-quadratic", 2).unwrap();
    for seed in 0..4 {
        let mut p = TiltParams::new(2, seed);
        p.base_n = 32;
        p.nv = 64;
        let f = tilted_field(&p).unwrap();
        let rep = verify_energy_decrease(&f, &spec, &tol()).unwrap();
        assert!(rep.consistent && rep.pass, "{rep:?}");
        assert!(rep.dirichlet_decrease > 1e-4, "{}", rep.dirichlet_decrease);
        assert!(rep.equimeasurability_defect.iter().all(|&d| d == 0.0));
    }
}

#[test]
fn two_base_axes() {
    let spec = registry::build("ac-quadratic", 2).unwrap();
    let mut p = TiltParams::new(2, 9);
    p.base_dim = 2;
    p.base_n = 12;
    p.nv = 40;
    let f = tilted_field(&p).unwrap();
    assert_eq!(f.base_count(), 144);
    let rep = verify_energy_decrease(&f, &spec, &tol()).unwrap();
    assert!(rep.pass, "{rep:?}");
}

#[test]
fn equal_boundary_values_are_rejected() {
    let f = BoxField::from_fn(vec![linspace(0.0, 1.0, 3)], unit_axis(5), 1, |_, _, t| t * (1.0 - t)).unwrap();
    assert!(rectangular_rearrangement(&f, &tol()).is_err());
}

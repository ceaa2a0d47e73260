use proptest::prelude::*;

use super::*;
use crate::nonlinearity::{double_well, double_well_d1, registry, BoxDomain, PairwiseSum, Zero};
use crate::pde::{solve_scalar_bvp, Mesh1D};

fn g(x: f64) -> f64 {
    (x / 2f64.sqrt()).tanh()
}

fn tanh_field(m: usize, n: usize) -> FieldBundle {
    let fs: Vec<&dyn Fn(f64) -> f64> = vec![&g; m];
    FieldBundle::from_fn(Mesh1D::symmetric(10.0, n).unwrap(), &fs).unwrap()
}

fn tol() -> Tolerances {
    Tolerances::default()
}

#[test]
fn diagonal_profile_recovers_double_well() {
    for m in [2, 3] {
        let f = tanh_field(m, 401);
        let spec = registry::build("ac-quadratic", m).unwrap();
        let pots = build_decoupling(&f, &spec, &tol()).unwrap();
        assert_eq!(pots.gauge.base_node, 200);
        assert!((pots.gauge.joint_constant() - spec.value(&f.point(200)).unwrap()).abs() < 1e-15);
        let c0: Vec<f64> = pots.curves.iter().map(|c| c.v[0] - double_well(c.p[0])).collect();
        for c in &pots.curves {
            for k in 0..c.len() {
                assert!((c.vprime[k] - double_well_d1(c.p[k])).abs() < 1e-12);
            }
        }
        for (c, off) in pots.curves.iter().zip(&c0) {
            for k in 0..c.len() {
                assert!((c.v[k] - double_well(c.p[k]) - off).abs() < 1e-12, "V = W + const");
            }
        }
        assert!(c0.iter().sum::<f64>().abs() < 1e-12);
        assert!(verify_on_solution_identity(&f, &pots, &spec).unwrap() <= 1e-12);
        let ineq = verify_global_inequality(&f, &pots, &spec, 33, &tol()).unwrap();
        assert_eq!(ineq.sense, crate::pde::Sense::Below);
        assert!(ineq.max_violation <= 1e-8, "{ineq:?}");
        let pde = verify_decoupled_pde(&f, &pots, &tol()).unwrap();
        assert!(pde.pass);
        assert!((pde.max_residual - pots.coupled_residual).abs() < 1e-12);
    }
}

#[test]
fn linear_field_with_zero_h_is_trivial() {
    let mesh = Mesh1D::new(0.0, 1.0, 21).unwrap();
    let f = FieldBundle::from_fn(mesh, &[&|x| x, &|x| 2.0 * x]).unwrap();
    let spec = NonlinearitySpec::from_impl(Zero { m: 2 }, BoxDomain::cube(2, 0.0, 2.0).unwrap()).unwrap();
    let pots = build_decoupling(&f, &spec, &tol()).unwrap();
    assert!(pots.curves.iter().all(|c| c.vprime.iter().all(|&d| d == 0.0) && c.v.iter().all(|&v| v == 0.0)));
    assert_eq!(verify_on_solution_identity(&f, &pots, &spec).unwrap(), 0.0);
    assert!(verify_decoupled_pde(&f, &pots, &tol()).unwrap().max_residual < 1e-10);
    let r = modica_check(&f, &pots, &spec, &tol()).unwrap();
    assert!(!r.applicable);
    assert_eq!(r.pass, None);
    assert!(r.max_gap > 2.0, "left side is Σ slopes²/2 = 2.5");
}

#[test]
fn same_direction_profiles_reverse_the_inequality() {
    let f = tanh_field(2, 201);
    let spec =
        NonlinearitySpec::from_impl(PairwiseSum { m: 2, coef: 1.0 }, BoxDomain::cube(2, -1.0, 1.0).unwrap()).unwrap();
    let pots = build_decoupling(&f, &spec, &tol()).unwrap();
    let r = verify_global_inequality(&f, &pots, &spec, 33, &tol()).unwrap();
    assert_eq!(r.sense, crate::pde::Sense::Above);
    assert!(r.pass, "{r:?}");
}

#[test]
fn mixed_signs_are_refused() {
    let mesh = Mesh1D::symmetric(10.0, 101).unwrap();
    let f = FieldBundle::from_fn(mesh, &[&g, &g, &|x| -g(x)]).unwrap();
    let spec = registry::build("ac-quadratic", 3).unwrap();
    let pots = build_decoupling(&f, &spec, &tol()).unwrap();
    assert!(matches!(verify_global_inequality(&f, &pots, &spec, 9, &tol()), Err(Error::NotHMonotone(_))));
}

#[test]
fn non_monotone_component_is_rejected() {
    let mesh = Mesh1D::symmetric(3.0, 61).unwrap();
    let f = FieldBundle::from_fn(mesh, &[&g, &|x| (x * x) / 9.0]).unwrap();
    let spec = registry::build("ac-quadratic", 2).unwrap();
    assert!(matches!(build_decoupling(&f, &spec, &tol()), Err(Error::NotMonotone { component: 2, .. })));
}

#[test]
fn modica_equality_on_exact_profile() {
    let f = tanh_field(2, 401);
    let spec = registry::build("ac-quadratic", 2).unwrap();
    let pots = build_decoupling(&f, &spec, &tol()).unwrap();
    let r = modica_check(&f, &pots, &spec, &tol()).unwrap();
    assert!(r.applicable && r.h_nonnegative);
    assert_eq!(r.pass, Some(true), "{:?}", (r.max_gap, r.nonnegative_gap));
    let h: Vec<f64> = f.points().iter().map(|p| spec.value(p).unwrap()).collect();
    let eq = r.lhs.iter().zip(&h).map(|(l, h)| (l - h).abs()).fold(0.0, f64::max);
    assert!(eq <= 1e-6, "{eq}");
    assert!(r.limit_gap <= 1e-12);
    assert!(r.refinement_gap <= 1e-6);
}

#[test]
fn decoupled_solve_reproduces_component() {
    let f = tanh_field(2, 201);
    let spec = registry::build("ac-quadratic", 2).unwrap();
    let pots = build_decoupling(&f, &spec, &tol()).unwrap();
    let (u, rep) = solve_scalar_bvp(&pots.force(0), f.mesh, f.boundary[0], None, &tol()).unwrap();
    assert!(rep.converged);
    let err = u.iter().zip(&f.components[0]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(err < 1e-3, "{err}");
}

#[test]
fn artifacts_roundtrip() {
    let f = tanh_field(2, 41);
    let spec = registry::build("ac-quadratic", 2).unwrap();
    let pots = build_decoupling(&f, &spec, &tol()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let files = pots.write_artifacts(dir.path(), &serde_json::json!({"identity": 0.0})).unwrap();
    assert_eq!(files.len(), 3);
    let back = PotentialCurve::read_csv(std::fs::File::open(&files[1]).unwrap()).unwrap();
    assert_eq!(back, pots.curves[1]);
    let manifest: serde_json::Value = crate::io::read_json(&files[2]).unwrap();
    assert_eq!(manifest["gauge"]["base_node"], 20);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn gauge_shifts_do_not_change_verdicts(c1 in -5.0f64..5.0, c2 in -5.0f64..5.0) {
        let f = tanh_field(3, 81);
        let spec = registry::build("ac-quadratic", 3).unwrap();
        let pots = build_decoupling(&f, &spec, &tol()).unwrap();
        let shifted = pots.shifted(&[c1, c2, -c1 - c2]).unwrap();
        let (a, b) = (
            verify_on_solution_identity(&f, &pots, &spec).unwrap(),
            verify_on_solution_identity(&f, &shifted, &spec).unwrap(),
        );
        prop_assert!((a - b).abs() < 1e-12);
        let (a, b) = (
            verify_global_inequality(&f, &pots, &spec, 9, &tol()).unwrap(),
            verify_global_inequality(&f, &shifted, &spec, 9, &tol()).unwrap(),
        );
        prop_assert_eq!(a.pass, b.pass);
        prop_assert!((a.max_violation - b.max_violation).abs() < 1e-12);
        prop_assert_eq!(
            verify_decoupled_pde(&f, &pots, &tol()).unwrap(),
            verify_decoupled_pde(&f, &shifted, &tol()).unwrap()
        );
    }

    #[test]
    fn slope_table_matches_gradient_at_nodes(shift in -0.5f64..0.5) {
        // Construction identity: Vᵢ'(uᵢ(xₖ)) = ∂ᵢH(u(xₖ)) at every node.
        let mesh = Mesh1D::symmetric(6.0, 61).unwrap();
        let f = FieldBundle::from_fn(mesh, &[&|x| 0.9 * g(x + shift), &|x| 0.8 * g(x - shift)]).unwrap();
        let spec = registry::build("ac-quadratic", 2).unwrap();
        let pots = build_decoupling(&f, &spec, &tol()).unwrap();
        for p in f.points() {
            let d = spec.gradient(&p).unwrap();
            for i in 0..2 {
                prop_assert!((pots.curves[i].eval_prime(p[i]) - d[i]).abs() < 1e-14);
            }
        }
        prop_assert!(verify_on_solution_identity(&f, &pots, &spec).unwrap() < 1e-12);
    }
}

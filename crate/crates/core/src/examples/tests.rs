use super::*;
use crate::nonlinearity::registry;
use crate::pde::{check_h_monotone, Mesh1D};
use crate::Tolerances;

fn mesh() -> Mesh1D {
    Mesh1D::symmetric(10.0, 401).unwrap()
}

fn failed(r: &ExampleReport) -> Vec<&Check> {
    r.checks.iter().filter(|c| !c.pass).collect()
}

#[test]
fn ac_quadratic_passes_for_two_components() {
    let run = run_ac_quadratic(2, mesh(), &Tolerances::default()).unwrap();
    assert!(run.report.pass, "{:#?}", failed(&run.report));
    assert!(run.report.checks.len() >= 12);
    let bridge = run.report.checks.iter().find(|c| c.name == "duality_bridge").unwrap();
    assert!(bridge.value <= 1e-8);
}

#[test]
fn ac_quadratic_passes_for_five_components() {
    let run = run_ac_quadratic(5, Mesh1D::symmetric(10.0, 201).unwrap(), &Tolerances::default()).unwrap();
    assert!(run.report.pass, "{:#?}", failed(&run.report));
}

#[test]
fn opposite_kinks_are_not_h_monotone() {
    let spec = registry::build("ac-quadratic", 2).unwrap();
    let field = ac_quadratic::kink_field(mesh(), &[1, -1]).unwrap();
    let v = check_h_monotone(&field, &spec, &Tolerances::default()).unwrap();
    assert!(!v.holds());
}

#[test]
fn logsumexp_all_positive() {
    let run = run_ac_logsumexp(3, mesh(), &[1, 1, 1], &Tolerances::default()).unwrap();
    assert!(run.report.pass, "{:#?}", failed(&run.report));
}

#[test]
fn logsumexp_mixed_signs_keep_second_order_residual() {
    let run = run_ac_logsumexp(2, mesh(), &[1, -1], &Tolerances::default()).unwrap();
    assert!(run.report.pass, "{:#?}", failed(&run.report));
    let ratio = run.report.observables["halving_ratio"];
    assert!((3.5..=4.5).contains(&ratio), "{ratio}");
}

#[test]
fn sign_box_avoids_zero() {
    let b = sign_box(&[1, -1]).unwrap();
    assert_eq!((b.lo.clone(), b.hi.clone()), (vec![0.05, -0.95], vec![0.95, -0.05]));
    assert!(sign_box(&[0, 1]).is_err());
}

#[test]
fn quadratic_coupling_pipeline_passes() {
    let run = run_quadratic_coupling(&QuadraticCouplingParams::default(), &Tolerances::default()).unwrap();
    assert!(run.report.pass, "{:#?}", failed(&run.report));
}

#[test]
fn swapping_components_swaps_potentials() {
    let tol = Tolerances::default();
    let p = QuadraticCouplingParams::default();
    let a = run_quadratic_coupling(&p, &tol).unwrap();
    let b = run_quadratic_coupling(&p.swapped(), &tol).unwrap();
    let (fa, fb) = (a.profile.unwrap(), b.profile.unwrap());
    for k in 0..fa.n() {
        assert!((fa.components[0][k] - fb.components[1][k]).abs() <= 1e-10);
        assert!((fa.components[1][k] - fb.components[0][k]).abs() <= 1e-10);
    }
    let (pa, pb) = (a.potentials.unwrap(), b.potentials.unwrap());
    for (x, y) in pa.curves[0].vprime.iter().zip(&pb.curves[1].vprime) {
        assert!((x - y).abs() <= 1e-9 * (1.0 + x.abs()));
    }
    let verdicts = |r: &ExampleReport| r.checks.iter().map(|c| (c.name.clone(), c.pass)).collect::<Vec<_>>();
    assert_eq!(verdicts(&a.report), verdicts(&b.report));
}

#[test]
fn scaling_covariance() {
    // u ↦ λu(λx) maps discrete solutions to discrete solutions on the same node count.
    let tol = Tolerances::default();
    let p = QuadraticCouplingParams::default();
    let lambda = 2.0;
    let a = run_quadratic_coupling(&p, &tol).unwrap().profile.unwrap();
    let b = run_quadratic_coupling(&p.scaled(lambda), &tol).unwrap().profile.unwrap();
    for i in 0..2 {
        for k in 0..a.n() {
            let (x, y) = (lambda * a.components[i][k], b.components[i][k]);
            assert!((x - y).abs() <= 1e-8 * (1.0 + x.abs()), "{i} {k}: {x} vs {y}");
        }
    }
}

#[test]
fn explicit_potential_of_linear_profile() {
    // u₁ = x, u₂ = 1 on [0, 1]: ∫₀ᵗ s ds = t²/2, exact up to trapezoid error h²/4·t.
    let mesh = Mesh1D::new(0.0, 1.0, 101).unwrap();
    let f = crate::pde::FieldBundle::from_fn(mesh, &[&|x| x, &|_| 1.0]).unwrap();
    let v = explicit_potential(&f, 0).unwrap();
    for (t, val) in v {
        assert!((val - 0.5 * t * t).abs() < 1e-12);
    }
}

#[test]
fn common_level_sets_detect_folds() {
    let mesh = Mesh1D::new(-1.0, 1.0, 21).unwrap();
    let good = crate::pde::FieldBundle::from_fn(mesh, &[&|x| x, &|x: f64| x.powi(3)]).unwrap();
    assert_eq!(common_level_set_discrepancy(&good), 0.0);
    let bad = crate::pde::FieldBundle::from_fn(mesh, &[&|x| x, &|x: f64| x * x]).unwrap();
    assert!(common_level_set_discrepancy(&bad) > 0.0);
}

#[test]
fn first_failure_names_the_stage() {
    // With u₁(−L) = 0.01 the discrete u₁ dips before rising.
    let p = QuadraticCouplingParams { boundary: [(0.01, 3.0), (3.0, 0.01)], ..Default::default() };
    let run = run_quadratic_coupling(&p, &Tolerances::default()).unwrap();
    assert!(!run.report.pass);
    assert_eq!(run.report.failure_stage.as_deref(), Some("monotone"));
}

#[test]
fn reports_are_deterministic_and_write_artifacts() {
    let tol = Tolerances::default();
    let a = run_ac_quadratic(2, mesh(), &tol).unwrap();
    let b = run_ac_quadratic(2, mesh(), &tol).unwrap();
    assert_eq!(serde_json::to_string(&a.report).unwrap(), serde_json::to_string(&b.report).unwrap());
    let dir = tempfile::tempdir().unwrap();
    let files = a.write_artifacts(dir.path()).unwrap();
    assert!(files.iter().all(|f| f.exists()));
    let back: ExampleReport = crate::io::read_json(&dir.path().join("report.json")).unwrap();
    assert_eq!(back.checks.len(), a.report.checks.len());
}

#[test]
fn failed_stages_roundtrip_through_json() {
    let p = QuadraticCouplingParams { boundary: [(0.01, 3.0), (3.0, 0.01)], ..Default::default() };
    let run = run_quadratic_coupling(&p, &Tolerances::default()).unwrap();
    let text = serde_json::to_string(&run.report).unwrap();
    let back: ExampleReport = serde_json::from_str(&text).unwrap();
    let c = back.checks.iter().find(|c| c.name == "monotone").unwrap();
    assert!(c.value.is_nan() && c.detail.is_some());
}

use serde_json::json;

use super::{common_level_set_discrepancy, duality_bridge_gap, kink, kink_prime, stage, ExampleRun, Recorder};
use crate::decouple::{
    build_decoupling, modica_check, verify_decoupled_pde, verify_global_inequality, verify_on_solution_identity,
};
use crate::mmot1d::{build_potentials_with, default_resolution, pushforward_coupling, verify_pushforward_optimality};
use crate::nonlinearity::{registry, verify_equivalence, NonlinearitySpec, Orientation, SampleGrid, DEFAULT_SEED};
use crate::pde::{max_norm, solve_system_bvp, system_residual, FieldBundle, InitialGuess, Mesh1D};
use crate::{Result, Tolerances};

/// Residual bound `4·10⁻⁴` at `h = 0.05`, scaled as `h²`.
pub(crate) const RESIDUAL_CONSTANT: f64 = 0.16;
/// Accepted range of `r(h)/r(h/2)` for a second-order scheme.
pub(crate) const HALVING_RATIO: (f64, f64) = (3.5, 4.5);
pub(crate) const EXACT_TOL: f64 = 1e-8;

pub(crate) fn double_well_prime(p: f64) -> f64 {
    p * (p * p - 1.0)
}

pub(crate) fn kink_field(mesh: Mesh1D, signs: &[i8]) -> Result<FieldBundle> {
    let comps = signs.iter().map(|&s| mesh.nodes().into_iter().map(|x| f64::from(s) * kink(x)).collect()).collect();
    FieldBundle::from_components(mesh, comps)
}

/// Residual of the kink profile at `mesh` and at the halved spacing.
pub(crate) fn residual_pair(spec: &NonlinearitySpec, mesh: Mesh1D, signs: &[i8]) -> Result<(f64, f64)> {
    let coarse = max_norm(&system_residual(spec, &kink_field(mesh, signs)?)?);
    let fine = max_norm(&system_residual(spec, &kink_field(mesh.refined(), signs)?)?);
    Ok((coarse, fine))
}

pub(crate) fn record_residuals(rec: &mut Recorder, coarse: f64, fine: f64, h: f64) -> bool {
    let ratio = coarse / fine;
    rec.note("residual_refined", fine);
    rec.note("halving_ratio", ratio);
    let a = rec.at_most("exact_residual", coarse, RESIDUAL_CONSTANT * h * h);
    let b = rec.check(
        "second_order_convergence",
        (HALVING_RATIO.0..=HALVING_RATIO.1).contains(&ratio),
        ratio,
        HALVING_RATIO.1,
    );
    a && b
}

/// Allen–Cahn pair potential `Σ_{i<j}(pᵢ−pⱼ)² + ΣW(pᵢ)` with the kink on every
/// component: orientability, residual order, decoupling, Modica, and the
/// transport certificate of the pushforward.
pub fn run_ac_quadratic(m: usize, mesh: Mesh1D, tol: &Tolerances) -> Result<ExampleRun> {
    let spec = registry::build("ac-quadratic", m)?;
    let mut rec = Recorder::new(
        "ac-quadratic",
        json!({ "m": m, "x_lo": mesh.x_lo, "x_hi": mesh.x_hi, "n": mesh.n, "tolerances": tol }),
    );
    let signs = vec![1i8; m];
    let h = mesh.h();

    let Some(eq) = stage(&mut rec, "orientable", || {
        verify_equivalence(&spec, &SampleGrid::default_for(&spec.domain, DEFAULT_SEED)?, tol)
    }) else {
        return Ok(rec.finish(None, None));
    };
    if !rec.flag("orientable", eq.orientable.holds() && eq.theta.as_deref() == Some(&signs[..])) {
        return Ok(rec.finish(None, None));
    }

    let Some((coarse, fine)) = stage(&mut rec, "exact_residual", || residual_pair(&spec, mesh, &signs)) else {
        return Ok(rec.finish(None, None));
    };
    record_residuals(&mut rec, coarse, fine, h);

    let exact = kink_field(mesh, &signs)?;
    let boundary = exact.boundary.clone();
    if let Some((solved, report)) =
        stage(&mut rec, "bvp", || solve_system_bvp(&spec, mesh, &boundary, InitialGuess::Linear, tol))
    {
        rec.flag("bvp_converged", report.converged);
        let err = solved
            .components
            .iter()
            .zip(&exact.components)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max);
        rec.note("bvp_iterations", report.iterations as f64);
        rec.at_most("bvp_matches_kink", err, RESIDUAL_CONSTANT * h * h);
    }

    let Some(pots) = stage(&mut rec, "decoupling", || build_decoupling(&exact, &spec, tol)) else {
        return Ok(rec.finish(Some(exact), None));
    };
    let slope_gap = pots
        .curves
        .iter()
        .flat_map(|c| c.p.iter().zip(&c.vprime).map(|(&p, &d)| (d - double_well_prime(p)).abs()))
        .fold(0.0, f64::max);
    rec.at_most("slopes_match_double_well", slope_gap, EXACT_TOL);

    if let Some(gap) = stage(&mut rec, "on_solution_identity", || verify_on_solution_identity(&exact, &pots, &spec)) {
        rec.at_most("on_solution_identity", gap, EXACT_TOL);
    }
    let res = default_resolution(m);
    if let Some(r) = stage(&mut rec, "global_inequality", || verify_global_inequality(&exact, &pots, &spec, res, tol)) {
        rec.at_most("global_inequality", r.max_violation.max(0.0), EXACT_TOL);
    }
    if let Some(r) = stage(&mut rec, "decoupled_pde", || verify_decoupled_pde(&exact, &pots, tol)) {
        rec.at_most("decoupled_pde", r.max_residual, r.threshold);
    }

    // ½Σ|uᵢ'|² = H(u) holds exactly for the kink; compare with analytic slopes first.
    let mut analytic: f64 = 0.0;
    for k in 0..exact.n() {
        let x = mesh.node(k);
        let lhs = 0.5 * m as f64 * kink_prime(x).powi(2);
        analytic = analytic.max((lhs - spec.value(&exact.point(k))?).abs());
    }
    rec.at_most("modica_equality_exact", analytic, EXACT_TOL);
    if let Some(r) = stage(&mut rec, "modica_equality", || modica_check(&exact, &pots, &spec, tol)) {
        let mut gap: f64 = 0.0;
        for (k, l) in r.lhs.iter().enumerate() {
            gap = gap.max((l - spec.value(&exact.point(k))?).abs());
        }
        rec.at_most("modica_equality", gap, tol.decouple);
        rec.flag("modica_inequality", r.pass == Some(true));
    }

    let ones = Orientation::ones(m);
    if let Some(r) =
        stage(&mut rec, "pushforward_certificate", || verify_pushforward_optimality(&exact, &spec, &ones, res, tol))
    {
        rec.note("support_distance", r.support_distance);
        rec.note("certificate_max_violation", r.certificate.max_violation);
        rec.flag("pushforward_certificate", r.pass);
    }
    if let Some(ot) =
        stage(&mut rec, "duality_bridge", || build_potentials_with(&pushforward_coupling(&exact, tol)?, &spec, res))
    {
        rec.at_most("duality_bridge", duality_bridge_gap(&exact, &pots, &ot), EXACT_TOL);
    }
    rec.note("common_level_set_discrepancy", common_level_set_discrepancy(&exact));
    Ok(rec.finish(Some(exact), Some(pots)))
}

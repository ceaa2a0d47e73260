use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{common_level_set_discrepancy, duality_bridge_gap, stage, ExampleRun, Recorder};
use crate::decouple::{build_decoupling, modica_check, verify_decoupled_pde, verify_global_inequality, PotentialCurve};
use crate::mmot1d::{build_potentials_with, default_resolution, pushforward_coupling, verify_pushforward_optimality};
use crate::nonlinearity::{registry, BoxDomain, Orientation};
use crate::pde::{
    check_h_monotone, directions, max_norm, solve_scalar_bvp, solve_system_bvp, system_residual, FieldBundle,
    InitialGuess, Mesh1D,
};
use crate::{Error, Result, Tolerances};

/// Explicit integrals against the telescoped potentials.
const INTEGRAL_TOL: f64 = 1e-6;
/// Second differences of `Fᵢ` on the `q` table.
const CONCAVITY_TOL: f64 = 1e-10;
/// Legendre gap; limited by the table spacing and the truncated range.
const CONJUGACY_TOL: f64 = 1e-3;
const SATURATION_TOL: f64 = 1e-6;
/// Decoupled scalar solves against the coupled components.
const DECOUPLED_SOLVE_TOL: f64 = 1e-4;
/// `Vᵢ''` jumps at table nodes, so Newton on the decoupled equation can stall
/// above `ε_newton`; a residual at this level already pins the profile.
const RESIDUAL_WARNING: f64 = crate::decouple::RESIDUAL_WARNING;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadraticCouplingParams {
    pub length: f64,
    pub n: usize,
    /// `(uᵢ(−L), uᵢ(L))`.
    pub boundary: [(f64, f64); 2],
}

impl Default for QuadraticCouplingParams {
    /// `u₁` rises from `10⁻¹²` to 3 and `u₂` mirrors it on `[−12, 12]`.
    ///
    /// A larger left value (say 0.01) makes the discrete `u₁` dip before it
    /// rises, so the profile is no longer monotone.
    fn default() -> Self {
        Self { length: 12.0, n: 601, boundary: [(1e-12, 3.0), (3.0, 1e-12)] }
    }
}

impl QuadraticCouplingParams {
    pub fn swapped(&self) -> Self {
        Self { boundary: [self.boundary[1], self.boundary[0]], ..self.clone() }
    }

    /// Boundary data times `λ` on the interval divided by `λ`.
    pub fn scaled(&self, lambda: f64) -> Self {
        let s = |(a, b): (f64, f64)| (a * lambda, b * lambda);
        Self { length: self.length / lambda, boundary: [s(self.boundary[0]), s(self.boundary[1])], ..self.clone() }
    }

    pub fn mesh(&self) -> Result<Mesh1D> {
        Mesh1D::symmetric(self.length, self.n)
    }
}

/// `tᵢ ↦ ∫ s·uⱼ²(uᵢ⁻¹(s)) ds` from the smallest value of `uᵢ`, by the
/// trapezoid rule over the nodes sorted by `uᵢ`. Returns `(t, V)` pairs.
pub fn explicit_potential(field: &FieldBundle, i: usize) -> Result<Vec<(f64, f64)>> {
    if field.m() != 2 || i > 1 {
        return Err(Error::invalid("explicit potentials are defined for two components"));
    }
    let (u, w) = (&field.components[i], &field.components[1 - i]);
    let mut order: Vec<usize> = (0..field.n()).collect();
    order.sort_by(|&a, &b| u[a].total_cmp(&u[b]));
    let integrand = |k: usize| u[k] * w[k] * w[k];
    let mut out = vec![(u[order[0]], 0.0)];
    for pair in order.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let last = out[out.len() - 1].1;
        out.push((u[b], last + 0.5 * (u[b] - u[a]) * (integrand(a) + integrand(b))));
    }
    Ok(out)
}

/// `Fᵢ(q) = 2Vᵢ(√q)` on the table nodes, `q` increasing.
fn concave_table(curve: &PotentialCurve) -> (Vec<f64>, Vec<f64>) {
    let q = curve.p.iter().map(|p| p * p).collect();
    let f = curve.v.iter().map(|v| 2.0 * v).collect();
    (q, f)
}

/// Largest `F` between neighbours minus the chord, in a form that stays exact
/// when consecutive `q` differ by much less than `q` itself.
fn max_second_difference(q: &[f64], f: &[f64]) -> f64 {
    (1..q.len() - 1)
        .map(|k| {
            let (dl, dr) = (q[k] - q[k - 1], q[k + 1] - q[k]);
            (dr * f[k - 1] + dl * f[k + 1]) / (dl + dr) - f[k]
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// `max_k |F₁(q₁ₖ) − minₗ(q₁ₖq₂ₗ − F₂(q₂ₗ))|`.
fn conjugacy_gap(q1: &[f64], f1: &[f64], q2: &[f64], f2: &[f64]) -> f64 {
    q1.iter()
        .zip(f1)
        .map(|(&a, &fa)| {
            let inner = q2.iter().zip(f2).map(|(&b, &fb)| a * b - fb).fold(f64::INFINITY, f64::min);
            (fa - inner).abs()
        })
        .fold(0.0, f64::max)
}

/// `½p₁²p₂²` with one rising and one falling positive component.
///
/// Solves the coupled problem, builds the potentials by telescoping and by the
/// explicit integrals, then checks concavity and conjugacy of `Fᵢ(q) = 2Vᵢ(√q)`,
/// saturation along the solution, decoupled solves and the transport certificate.
pub fn run_quadratic_coupling(params: &QuadraticCouplingParams, tol: &Tolerances) -> Result<ExampleRun> {
    let mesh = params.mesh()?;
    let top = params.boundary.iter().flat_map(|&(a, b)| [a, b]).fold(0.0, f64::max);
    let spec = registry::build_with("quadratic-coupling", 2, BoxDomain::cube(2, 0.0, top)?, &Default::default())?;
    let mut rec = Recorder::new("quadratic-coupling", json!({ "params": params, "tolerances": tol }));

    let Some((field, report)) =
        stage(&mut rec, "bvp", || solve_system_bvp(&spec, mesh, &params.boundary, InitialGuess::Linear, tol))
    else {
        return Ok(rec.finish(None, None));
    };
    rec.note("bvp_iterations", report.iterations as f64);
    let residual = max_norm(&system_residual(&spec, &field)?);
    if !(rec.flag("bvp_converged", report.converged) & rec.at_most("bvp_residual", residual, tol.newton)) {
        return Ok(rec.finish(Some(field), None));
    }
    let min_value = field.components.iter().flatten().copied().fold(f64::INFINITY, f64::min);
    rec.check("positive", min_value > 0.0, min_value, 0.0);

    let rising = params.boundary[0].0 < params.boundary[0].1;
    let expected = if rising { [1, -1] } else { [-1, 1] };
    if let Some(dirs) = stage(&mut rec, "monotone", || directions(&field, tol)) {
        rec.flag("monotone", dirs == expected);
    }
    if let Some(v) = stage(&mut rec, "h_monotone", || check_h_monotone(&field, &spec, tol)) {
        rec.flag("h_monotone", v.holds());
    }

    let Some(pots) = stage(&mut rec, "decoupling", || build_decoupling(&field, &spec, tol)) else {
        return Ok(rec.finish(Some(field), None));
    };

    let mut integral_gap: f64 = 0.0;
    for (i, curve) in pots.curves.iter().enumerate() {
        let oracle = explicit_potential(&field, i)?;
        let (t0, _) = oracle[0];
        let v0 = curve.eval(t0);
        for &(t, v) in &oracle {
            integral_gap = integral_gap.max((curve.eval(t) - v0 - v).abs());
        }
    }
    rec.at_most("explicit_integrals", integral_gap, INTEGRAL_TOL);

    let (q1, f1) = concave_table(&pots.curves[0]);
    let (q2, f2) = concave_table(&pots.curves[1]);
    let concavity = max_second_difference(&q1, &f1).max(max_second_difference(&q2, &f2));
    rec.at_most("concavity", concavity.max(0.0), CONCAVITY_TOL);
    rec.at_most("conjugacy", conjugacy_gap(&q1, &f1, &q2, &f2), CONJUGACY_TOL);

    let mut saturation: f64 = 0.0;
    for p in field.points() {
        let sum = 2.0 * pots.eval_sum(&p);
        saturation = saturation.max((sum - p[0] * p[0] * p[1] * p[1]).abs());
    }
    rec.at_most("saturation", saturation, SATURATION_TOL);

    let res = default_resolution(2);
    if let Some(r) = stage(&mut rec, "global_inequality", || verify_global_inequality(&field, &pots, &spec, res, tol)) {
        rec.at_most("global_inequality", r.max_violation.max(0.0), tol.decouple);
    }
    if let Some(r) = stage(&mut rec, "decoupled_pde", || verify_decoupled_pde(&field, &pots, tol)) {
        rec.at_most("decoupled_pde", r.max_residual, r.threshold);
    }
    for i in 0..2 {
        let name = format!("decoupled_solve_{}", i + 1);
        if let Some((u, r)) =
            stage(&mut rec, &name, || solve_scalar_bvp(&pots.force(i), mesh, field.boundary[i], None, tol))
        {
            let gap = u.iter().zip(&field.components[i]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            rec.note(&format!("{name}_residual"), r.final_residual_norm);
            let solved = r.final_residual_norm <= RESIDUAL_WARNING;
            rec.check(&name, solved && gap <= DECOUPLED_SOLVE_TOL, gap, DECOUPLED_SOLVE_TOL);
        }
    }
    // Observable only: the discrete first integral differs from ½|u'|² − H by
    // O(h²), which is the size of the margin here.
    if let Ok(r) = modica_check(&field, &pots, &spec, tol) {
        rec.note("modica_max_gap", r.max_gap);
    }

    let orientation = Orientation::new(vec![1, -1])?;
    if let Some(r) = stage(&mut rec, "pushforward_certificate", || {
        verify_pushforward_optimality(&field, &spec, &orientation, res, tol)
    }) {
        rec.note("support_distance", r.support_distance);
        rec.note("certificate_max_violation", r.certificate.max_violation);
        rec.flag("pushforward_certificate", r.pass);
    }
    // Observable only: the transport potentials are piecewise linear between
    // table nodes, so they agree with the telescoped ones to table accuracy.
    if let Ok(ot) = pushforward_coupling(&field, tol).and_then(|c| build_potentials_with(&c, &spec, res)) {
        rec.note("duality_bridge", duality_bridge_gap(&field, &pots, &ot));
    }
    rec.note("common_level_set_discrepancy", common_level_set_discrepancy(&field));
    Ok(rec.finish(Some(field), Some(pots)))
}

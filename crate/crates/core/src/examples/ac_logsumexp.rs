use serde_json::json;

use super::ac_quadratic::{double_well_prime, kink_field, record_residuals, residual_pair, EXACT_TOL};
use super::{common_level_set_discrepancy, stage, ExampleRun, Recorder};
use crate::decouple::{build_decoupling, verify_decoupled_pde};
use crate::mmot1d::default_resolution;
use crate::nonlinearity::{
    linspace, registry, verify_equivalence, BoxDomain, NonlinearitySpec, SampleGrid, DEFAULT_SEED,
};
use crate::pde::Mesh1D;
use crate::{Error, Result, Tolerances};

/// Half-width of the excluded neighbourhood of `pᵢ = 0`, where `Hᵢⱼ` vanishes.
pub const ZERO_MARGIN: f64 = 0.05;

/// `AM–GM` slack: `ΣW(pᵢ) − H(p)` may exceed zero by rounding only.
const AM_GM_TOL: f64 = 1e-12;

/// `[0.05, 0.95]` for `+1`, `[−0.95, −0.05]` for `−1`, per coordinate.
pub fn sign_box(signs: &[i8]) -> Result<BoxDomain> {
    if signs.iter().any(|s| s.abs() != 1) {
        return Err(Error::invalid("signs must be ±1"));
    }
    let lo = signs.iter().map(|&s| if s > 0 { ZERO_MARGIN } else { -1.0 + ZERO_MARGIN }).collect();
    let hi = signs.iter().map(|&s| if s > 0 { 1.0 - ZERO_MARGIN } else { -ZERO_MARGIN }).collect();
    BoxDomain::new(lo, hi)
}

fn double_well(p: f64) -> f64 {
    0.25 * (p * p - 1.0).powi(2)
}

/// `max(ΣW(pᵢ) − H(p))` over a tensor grid.
fn am_gm_excess(spec: &NonlinearitySpec, axes: &[Vec<f64>]) -> Result<f64> {
    let mut worst = f64::NEG_INFINITY;
    for p in crate::nonlinearity::tensor_product(axes) {
        let w: f64 = p.iter().map(|&x| double_well(x)).sum();
        worst = worst.max(w - spec.value(&p)?);
    }
    Ok(worst)
}

/// `max |H(p) − ΣW(pᵢ)|` over points with all `pᵢ²` equal, every sign pattern.
fn equality_locus_gap(spec: &NonlinearitySpec) -> Result<f64> {
    let m = spec.m();
    let mut worst: f64 = 0.0;
    for t in linspace(0.0, 1.0, 41) {
        for mask in 0..(1usize << m) {
            let p: Vec<f64> = (0..m).map(|i| if mask & (1 << i) != 0 { -t } else { t }).collect();
            let w: f64 = p.iter().map(|&x| double_well(x)).sum();
            worst = worst.max((spec.value(&p)? - w).abs());
        }
    }
    Ok(worst)
}

/// Log-sum-exp of Allen–Cahn wells with `uᵢ = sᵢ·tanh(x/√2)`: orientability on
/// the sign box, residual order, the AM–GM lower bound and the decoupled
/// Allen–Cahn equations.
pub fn run_ac_logsumexp(m: usize, mesh: Mesh1D, signs: &[i8], tol: &Tolerances) -> Result<ExampleRun> {
    if signs.len() != m {
        return Err(Error::DimensionMismatch { expected: m, got: signs.len() });
    }
    let boxed = registry::build_with("ac-logsumexp", m, sign_box(signs)?, &Default::default())?;
    // Profiles cross zero and reach ±1; the sign box only governs orientability.
    let spec = boxed.with_domain(BoxDomain::cube(m, -1.0, 1.0)?)?;
    let mut rec = Recorder::new(
        "ac-logsumexp",
        json!({ "m": m, "signs": signs, "x_lo": mesh.x_lo, "x_hi": mesh.x_hi, "n": mesh.n, "tolerances": tol }),
    );

    let Some(eq) = stage(&mut rec, "orientable", || {
        verify_equivalence(&boxed, &SampleGrid::default_for(&boxed.domain, DEFAULT_SEED)?, tol)
    }) else {
        return Ok(rec.finish(None, None));
    };
    let expected: Vec<i8> = signs.iter().map(|s| s * signs[0]).collect();
    if !rec.flag("orientable", eq.orientable.holds() && eq.theta.as_deref() == Some(&expected[..])) {
        return Ok(rec.finish(None, None));
    }

    let Some((coarse, fine)) = stage(&mut rec, "exact_residual", || residual_pair(&spec, mesh, signs)) else {
        return Ok(rec.finish(None, None));
    };
    record_residuals(&mut rec, coarse, fine, mesh.h());

    let exact = kink_field(mesh, signs)?;
    let res = default_resolution(m);
    let axes: Vec<Vec<f64>> = exact.ranges().into_iter().map(|(a, b)| linspace(a, b, res)).collect();
    if let Some(excess) = stage(&mut rec, "am_gm", || am_gm_excess(&spec, &axes)) {
        rec.at_most("am_gm", excess.max(0.0), AM_GM_TOL);
    }
    if let Some(gap) = stage(&mut rec, "equality_locus", || equality_locus_gap(&spec)) {
        rec.at_most("equality_locus", gap, AM_GM_TOL);
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
    if let Some(r) = stage(&mut rec, "decoupled_pde", || verify_decoupled_pde(&exact, &pots, tol)) {
        rec.at_most("decoupled_pde", r.max_residual, r.threshold);
    }
    rec.note("common_level_set_discrepancy", common_level_set_discrepancy(&exact));
    Ok(rec.finish(Some(exact), Some(pots)))
}

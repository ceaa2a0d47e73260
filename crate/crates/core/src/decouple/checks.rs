use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::DecouplingPotentials;
use crate::mmot1d::default_resolution;
use crate::nonlinearity::{linspace, NonlinearitySpec};
use crate::pde::fd::derivative;
use crate::pde::{classify_sense, FieldBundle, Sense};
use crate::{Error, Result, Tolerances};

/// A `Vᵢ'` table whose entries are all below this in magnitude counts as
/// degenerate: the scalar equation has no coercive potential.
pub const DEGENERATE_SLOPE: f64 = 1e-12;

fn check_shapes(field: &FieldBundle, pots: &DecouplingPotentials) -> Result<()> {
    if pots.m() != field.m() {
        return Err(Error::DimensionMismatch { expected: field.m(), got: pots.m() });
    }
    Ok(())
}

/// `maxₖ |ΣVᵢ(uᵢ(xₖ)) − H(u(xₖ))|`.
pub fn verify_on_solution_identity(
    field: &FieldBundle,
    pots: &DecouplingPotentials,
    spec: &NonlinearitySpec,
) -> Result<f64> {
    check_shapes(field, pots)?;
    let mut gap: f64 = 0.0;
    for p in field.points() {
        gap = gap.max((pots.eval_sum(&p) - spec.value(&p)?).abs());
    }
    Ok(gap)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub sense: Sense,
    /// `max(ΣVᵢ − H)` for `Below`, `max(H − ΣVᵢ)` for `Above`.
    pub max_violation: f64,
    pub resolution: usize,
    pub points: usize,
    pub pass: bool,
}

/// `ΣVᵢ(pᵢ) ≤ H(p)` (H-monotone) or `≥` ((−H)-monotone) on a `resolutionᵐ`
/// grid over the product of the component ranges.
pub fn verify_global_inequality(
    field: &FieldBundle,
    pots: &DecouplingPotentials,
    spec: &NonlinearitySpec,
    resolution: usize,
    tol: &Tolerances,
) -> Result<InequalityReport> {
    check_shapes(field, pots)?;
    let sense = match classify_sense(field, spec, tol)? {
        Ok(s) => s,
        Err(verdict) => return Err(Error::NotHMonotone(serde_json::to_string(&verdict)?)),
    };
    let res = resolution.max(2);
    let axes: Vec<Vec<f64>> = field.ranges().into_iter().map(|(a, b)| linspace(a, b, res)).collect();
    let m = axes.len();
    let vt: Vec<Vec<f64>> =
        axes.iter().zip(&pots.curves).map(|(a, c)| a.iter().map(|&x| c.eval(x)).collect()).collect();
    let total = res.pow(m as u32);
    let sign = match sense {
        Sense::Below => 1.0,
        Sense::Above => -1.0,
    };
    let max_violation = (0..total)
        .into_par_iter()
        .map_init(
            || vec![0.0; m],
            |p, mut flat| {
                let mut s = 0.0;
                for i in (0..m).rev() {
                    let k = flat % res;
                    flat /= res;
                    p[i] = axes[i][k];
                    s += vt[i][k];
                }
                spec.value(p).map(|h| sign * (s - h))
            },
        )
        .try_reduce(|| f64::NEG_INFINITY, |a, b| Ok(a.max(b)))?;
    Ok(InequalityReport { sense, max_violation, resolution: res, points: total, pass: max_violation <= tol.decouple })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecoupledPdeReport {
    pub max_residual: f64,
    pub per_component: Vec<f64>,
    pub coupled_residual: f64,
    /// `max(ε_decouple, 10 × coupled residual)`.
    pub threshold: f64,
    pub pass: bool,
}

/// Centered-difference residual of `uᵢ'' = Vᵢ'(uᵢ)` at interior nodes.
pub fn verify_decoupled_pde(
    field: &FieldBundle,
    pots: &DecouplingPotentials,
    tol: &Tolerances,
) -> Result<DecoupledPdeReport> {
    check_shapes(field, pots)?;
    let h = field.mesh.h();
    let ih2 = 1.0 / (h * h);
    let per_component: Vec<f64> = field
        .components
        .iter()
        .zip(&pots.curves)
        .map(|(u, c)| {
            u.windows(3).fold(0.0f64, |a, w| a.max(((w[2] - 2.0 * w[1] + w[0]) * ih2 - c.eval_prime(w[1])).abs()))
        })
        .collect();
    let max_residual = per_component.iter().copied().fold(0.0, f64::max);
    let threshold = tol.decouple.max(10.0 * pots.coupled_residual);
    Ok(DecoupledPdeReport {
        max_residual,
        per_component,
        coupled_residual: pots.coupled_residual,
        threshold,
        pass: max_residual <= threshold,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModicaReport {
    /// `½Σ|uᵢ'|²` per node (sixth-order differences).
    pub lhs: Vec<f64>,
    /// `H(u) − ΣV̄ᵢ` per node.
    pub rhs: Vec<f64>,
    /// `max(lhs − rhs)`.
    pub max_gap: f64,
    pub v_bar: Vec<f64>,
    /// `Cᵢ = Vᵢ(uᵢ(x_right))`.
    pub constants: Vec<f64>,
    /// `max |½Σ|uᵢ'|² − (ΣVᵢ(uᵢ) − ΣCᵢ)|`.
    pub refinement_gap: f64,
    /// `|ΣCᵢ − H(u(x_right))|`.
    pub limit_gap: f64,
    /// Whether `H ≥ 0` on the range-product grid.
    pub h_nonnegative: bool,
    /// `½Σ|uᵢ'|²` at the right end; the refinement assumes it vanishes.
    pub end_kinetic: f64,
    /// `max(½Σ|uᵢ'|² − H(u))` when `H ≥ 0` and the right end is flat.
    pub nonnegative_gap: Option<f64>,
    /// False when some `Vᵢ'` table is identically zero.
    pub applicable: bool,
    /// `None` when not applicable.
    pub pass: Option<bool>,
}

/// Both sides of `½Σ|uᵢ'|² ≤ H(u) − ΣV̄ᵢ` at every node, plus the 1D refinement.
pub fn modica_check(
    field: &FieldBundle,
    pots: &DecouplingPotentials,
    spec: &NonlinearitySpec,
    tol: &Tolerances,
) -> Result<ModicaReport> {
    check_shapes(field, pots)?;
    crate::pde::directions(field, tol)?;
    let (m, n) = (field.m(), field.n());
    let h = field.mesh.h();
    let grads: Vec<Vec<f64>> = field.components.iter().map(|c| derivative(c, h)).collect();
    let v_bar: Vec<f64> = pots.curves.iter().map(|c| c.min_value()).collect();
    let sum_bar: f64 = v_bar.iter().sum();
    let right = field.point(n - 1);
    let constants: Vec<f64> = pots.curves.iter().zip(&right).map(|(c, &x)| c.eval(x)).collect();
    let sum_c: f64 = constants.iter().sum();
    let limit_gap = (sum_c - spec.value(&right)?).abs();

    let mut lhs = Vec::with_capacity(n);
    let mut rhs = Vec::with_capacity(n);
    let mut hvals = Vec::with_capacity(n);
    let mut refinement_gap: f64 = 0.0;
    for k in 0..n {
        let p = field.point(k);
        let hk = spec.value(&p)?;
        let l = 0.5 * (0..m).map(|i| grads[i][k] * grads[i][k]).sum::<f64>();
        refinement_gap = refinement_gap.max((l - (pots.eval_sum(&p) - sum_c)).abs());
        lhs.push(l);
        rhs.push(hk - sum_bar);
        hvals.push(hk);
    }
    let max_gap = lhs.iter().zip(&rhs).map(|(l, r)| l - r).fold(f64::NEG_INFINITY, f64::max);

    let end_kinetic = lhs[n - 1];
    let h_nonnegative = min_on_range_product(spec, &field.ranges())? >= 0.0;
    let nonnegative_gap = (h_nonnegative && end_kinetic <= tol.decouple)
        .then(|| lhs.iter().zip(&hvals).map(|(l, h)| l - h).fold(f64::NEG_INFINITY, f64::max));
    let applicable = pots.curves.iter().all(|c| c.vprime.iter().any(|d| d.abs() > DEGENERATE_SLOPE));
    let pass = applicable.then(|| max_gap <= tol.decouple && nonnegative_gap.is_none_or(|g| g <= tol.decouple));
    Ok(ModicaReport {
        lhs,
        rhs,
        max_gap,
        v_bar,
        constants,
        refinement_gap,
        limit_gap,
        h_nonnegative,
        end_kinetic,
        nonnegative_gap,
        applicable,
        pass,
    })
}

fn min_on_range_product(spec: &NonlinearitySpec, ranges: &[(f64, f64)]) -> Result<f64> {
    let m = ranges.len();
    let res = default_resolution(m);
    let axes: Vec<Vec<f64>> = ranges.iter().map(|&(a, b)| linspace(a, b, res)).collect();
    (0..res.pow(m as u32))
        .into_par_iter()
        .map_init(
            || vec![0.0; m],
            |p, mut flat| {
                for i in (0..m).rev() {
                    p[i] = axes[i][flat % res];
                    flat /= res;
                }
                spec.value(p)
            },
        )
        .try_reduce(|| f64::INFINITY, |a, b| Ok(a.min(b)))
}

//! Decoupling potentials `Vᵢ(pᵢ)` for monotone one-dimensional profiles.
//!
//! Along a monotone solution of `u'' = ∇H(u)` each component can be inverted,
//! so `∂ᵢH(u)` becomes a function of `uᵢ` alone and integrating it gives a
//! potential with `uᵢ'' = Vᵢ'(uᵢ)`. The constants are fixed so that
//! `ΣVᵢ(uᵢ) = H(u)` along the profile; for H-monotone profiles the sum stays
//! below `H` on the whole range product.

mod checks;
mod curve;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::nonlinearity::NonlinearitySpec;
use crate::pde::{directions, max_norm, system_residual, FieldBundle, ScalarForce};
use crate::{Error, Result, Tolerances};

pub use checks::{
    modica_check, verify_decoupled_pde, verify_global_inequality, verify_on_solution_identity, DecoupledPdeReport,
    InequalityReport, ModicaReport, DEGENERATE_SLOPE,
};
pub use curve::PotentialCurve;

/// Residual above which `build_decoupling` still proceeds but records a warning.
pub const RESIDUAL_WARNING: f64 = 1e-6;

/// Where the additive constants were pinned.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gauge {
    pub base_node: usize,
    pub base_x: f64,
    pub base_point: Vec<f64>,
    /// `Vᵢ(uᵢ(x_base))`; sums to `H(u(x_base))`.
    pub base_values: Vec<f64>,
}

impl Gauge {
    pub fn joint_constant(&self) -> f64 {
        self.base_values.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecouplingPotentials {
    pub curves: Vec<PotentialCurve>,
    pub gauge: Gauge,
    /// Max-norm residual of the profile in the coupled system.
    pub coupled_residual: f64,
    pub warnings: Vec<String>,
}

impl DecouplingPotentials {
    pub fn m(&self) -> usize {
        self.curves.len()
    }

    pub fn eval_sum(&self, p: &[f64]) -> f64 {
        self.curves.iter().zip(p).map(|(c, &x)| c.eval(x)).sum()
    }

    /// Adds `c[i]` to `Vᵢ`; a pure re-gauge when `Σcᵢ = 0`.
    pub fn shifted(&self, c: &[f64]) -> Result<Self> {
        if c.len() != self.m() {
            return Err(Error::DimensionMismatch { expected: self.m(), got: c.len() });
        }
        let mut out = self.clone();
        for ((curve, b), &s) in out.curves.iter_mut().zip(&mut out.gauge.base_values).zip(c) {
            curve.v.iter_mut().for_each(|v| *v += s);
            *b += s;
        }
        Ok(out)
    }

    /// Scalar right-hand side `Vᵢ'` for decoupled solves.
    pub fn force(&self, i: usize) -> DecoupledForce<'_> {
        DecoupledForce(&self.curves[i])
    }

    /// One `potential_<i>.csv` per component (columns p, V, Vprime) and a
    /// `potentials.json` manifest holding the gauge, ranges and `results`.
    pub fn write_artifacts(&self, dir: &Path, results: &serde_json::Value) -> Result<Vec<PathBuf>> {
        let mut written = Vec::with_capacity(self.m() + 1);
        for (i, c) in self.curves.iter().enumerate() {
            let path = dir.join(format!("potential_{}.csv", i + 1));
            c.write_csv(crate::io::create(&path)?)?;
            written.push(path);
        }
        let manifest = serde_json::json!({
            "gauge": self.gauge,
            "joint_constant": self.gauge.joint_constant(),
            "ranges": self.curves.iter().map(PotentialCurve::range).collect::<Vec<_>>(),
            "coupled_residual": self.coupled_residual,
            "warnings": self.warnings,
            "results": results,
        });
        let path = dir.join("potentials.json");
        crate::io::write_json(&path, &manifest)?;
        written.push(path);
        Ok(written)
    }
}

/// `u'' = Vᵢ'(u)` with the cubic-Hermite potential of one component.
pub struct DecoupledForce<'a>(&'a PotentialCurve);

impl ScalarForce for DecoupledForce<'_> {
    fn value(&self, u: f64) -> f64 {
        self.0.eval_prime(u)
    }
    fn derivative(&self, u: f64) -> f64 {
        self.0.eval_second(u)
    }
    fn potential(&self, u: f64) -> f64 {
        self.0.eval(u)
    }
}

/// Builds `Vᵢ` from a monotone profile.
///
/// Per mesh step the increments are the trapezoid rule for `∫∂ᵢH duᵢ`; the
/// mismatch against `ΔH` (third order in the step) is shared between components
/// in proportion to `|Δuᵢ|`, so `ΣVᵢ(uᵢ(xₖ)) = H(u(xₖ))` holds at every node.
/// Constants: `Vᵢ(uᵢ(x_base)) = 0` for `i ≥ 2` and `V₁(u₁(x_base)) = H(u(x_base))`
/// with the base at the mesh midpoint.
pub fn build_decoupling(
    field: &FieldBundle,
    spec: &NonlinearitySpec,
    tol: &Tolerances,
) -> Result<DecouplingPotentials> {
    let (m, n) = (field.m(), field.n());
    if spec.m() != m {
        return Err(Error::DimensionMismatch { expected: spec.m(), got: m });
    }
    directions(field, tol)?;
    let coupled_residual = max_norm(&system_residual(spec, field)?);
    let mut warnings = Vec::new();
    if coupled_residual > RESIDUAL_WARNING {
        warnings.push(format!("coupled residual {coupled_residual:.3e} exceeds {RESIDUAL_WARNING:e}"));
    }
    let pts = field.points();
    let hv: Vec<f64> = pts.iter().map(|p| spec.value(p)).collect::<Result<_>>()?;
    let grads: Vec<Vec<f64>> = pts.iter().map(|p| spec.gradient(p)).collect::<Result<_>>()?;

    let step = |k: usize, j: usize| -> Vec<f64> {
        // Increments of each Vᵢ from node k to node j = k ± 1.
        let d: Vec<f64> = (0..m).map(|i| pts[j][i] - pts[k][i]).collect();
        let trap: Vec<f64> = (0..m).map(|i| 0.5 * (grads[k][i] + grads[j][i]) * d[i]).collect();
        let defect = hv[j] - hv[k] - trap.iter().sum::<f64>();
        let weight: f64 = d.iter().map(|x| x.abs()).sum();
        (0..m).map(|i| if weight > 0.0 { trap[i] + defect * d[i].abs() / weight } else { 0.0 }).collect()
    };

    let base = field.mesh.midpoint_index();
    let mut nodal = vec![vec![0.0; m]; n];
    nodal[base][0] = hv[base];
    for k in base..n - 1 {
        let inc = step(k, k + 1);
        nodal[k + 1] = nodal[k].iter().zip(&inc).map(|(a, b)| a + b).collect();
    }
    for k in (1..=base).rev() {
        let inc = step(k, k - 1);
        nodal[k - 1] = nodal[k].iter().zip(&inc).map(|(a, b)| a + b).collect();
    }

    let curves = (0..m)
        .map(|i| {
            let rows: Vec<(f64, f64, f64)> = (0..n).map(|k| (pts[k][i], nodal[k][i], grads[k][i])).collect();
            PotentialCurve::from_nodes(rows)
        })
        .collect::<Result<Vec<_>>>()?;
    let gauge = Gauge {
        base_node: base,
        base_x: field.mesh.node(base),
        base_point: pts[base].clone(),
        base_values: nodal[base].clone(),
    };
    Ok(DecouplingPotentials { curves, gauge, coupled_residual, warnings })
}

/// Per-slice construction for gridded data with several base coordinates.
pub fn build_decoupling_slices(
    slices: &[FieldBundle],
    spec: &NonlinearitySpec,
    tol: &Tolerances,
) -> Result<Vec<DecouplingPotentials>> {
    use rayon::prelude::*;
    slices.par_iter().map(|f| build_decoupling(f, spec, tol)).collect()
}

#[cfg(test)]
mod tests;

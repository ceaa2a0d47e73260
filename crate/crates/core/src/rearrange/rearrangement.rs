use serde::{Deserialize, Serialize};

use super::field::BoxField;
use crate::mmot1d::DiscreteMarginal;
use crate::nonlinearity::NonlinearitySpec;
use crate::pde::{FieldBundle, Mesh1D};
use crate::{Error, Result, Tolerances};

#[derive(Debug, Clone, PartialEq)]
pub struct Rearrangement {
    /// `ūᵢ` on the vertical grid.
    pub profile: FieldBundle,
    /// `μᵢ = uᵢ#(normalized trapezoid measure on the box grid)`.
    pub marginals: Vec<DiscreteMarginal>,
    pub directions: Vec<i8>,
}

/// `ūᵢ(x_N)` is the left-continuous quantile of `μᵢ` at level `x_N` for
/// increasing components and the upper-tail quantile for decreasing ones, so
/// that `ū` has the distribution of `u` under the grid measure.
pub fn rectangular_rearrangement(field: &BoxField, tol: &Tolerances) -> Result<Rearrangement> {
    for (i, (a, b)) in field.boundary().into_iter().enumerate() {
        if a == b {
            return Err(Error::invalid(format!("component {} has equal boundary values {a}", i + 1)));
        }
    }
    let directions = field.directions(tol)?;
    let wb = field.base_weights();
    let wv = super::trapezoid_weights(field.nv());
    let weights: Vec<f64> = wb.iter().flat_map(|a| wv.iter().map(move |b| a * b)).collect();
    let marginals = field
        .components
        .iter()
        .map(|c| DiscreteMarginal::from_values(c, Some(&weights)))
        .collect::<Result<Vec<_>>>()?;
    let components = marginals
        .iter()
        .zip(&directions)
        .map(|(mu, &d)| {
            if d > 0 {
                field.vertical.iter().map(|&t| mu.quantile(t)).collect()
            } else {
                // Upper tail: sup{y : μ([y, ∞)) ≥ t} = −Q_{−μ}(t).
                let neg = mu.flipped(-1);
                field.vertical.iter().map(|&t| -neg.quantile(t)).collect()
            }
        })
        .collect();
    let mesh = Mesh1D::new(0.0, 1.0, field.nv())?;
    let profile = FieldBundle::from_components(mesh, components)?;
    Ok(Rearrangement { profile, marginals, directions })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryConsistency {
    pub holds: bool,
    /// First failing `(flat index, pair (1-based), Hᵢⱼ·(bᵢ−aᵢ)·(bⱼ−aⱼ))`.
    pub witness: Option<(usize, (usize, usize), f64)>,
    pub checked: usize,
}

/// `Hᵢⱼ(u)·(bᵢ−aᵢ)·(bⱼ−aⱼ) < 0` at every grid value of `u`.
pub fn boundary_consistency(field: &BoxField, spec: &NonlinearitySpec) -> Result<BoundaryConsistency> {
    let m = field.m();
    if spec.m() != m {
        return Err(Error::DimensionMismatch { expected: spec.m(), got: m });
    }
    let ab = field.boundary();
    let len = field.components[0].len();
    let mut p = vec![0.0; m];
    let mut hess = vec![0.0; m * m];
    for k in 0..len {
        for i in 0..m {
            p[i] = field.components[i][k];
        }
        spec.hessian_into(&p, &mut hess)?;
        for i in 0..m {
            for j in (i + 1)..m {
                let v = hess[i * m + j] * (ab[i].1 - ab[i].0) * (ab[j].1 - ab[j].0);
                if !(v < 0.0) {
                    return Ok(BoundaryConsistency {
                        holds: false,
                        witness: Some((k, (i + 1, j + 1), v)),
                        checked: k + 1,
                    });
                }
            }
        }
    }
    Ok(BoundaryConsistency { holds: true, witness: None, checked: len })
}

/// For each component, the largest distance from a vertical level `t_j` to
/// the cumulative-mass bracket `[F(ūⱼ−), F(ūⱼ)]` of `μᵢ` (upper-tail masses
/// for decreasing components). Zero means every `ūᵢ(t_j)` is a `t_j`-quantile
/// of `μᵢ`; a value that is not an atom of `μᵢ` gives infinity.
pub fn equimeasurability_defect(r: &Rearrangement) -> Vec<f64> {
    let levels = r.profile.mesh.nodes();
    r.marginals
        .iter()
        .zip(&r.directions)
        .zip(&r.profile.components)
        .map(|((mu, &d), ubar)| {
            let mu = mu.flipped(d);
            let cum = mu.cumulative();
            levels
                .iter()
                .zip(ubar)
                .map(|(&t, &y)| {
                    let y = f64::from(d) * y;
                    let k = mu.atoms().partition_point(|&a| a < y);
                    if k >= mu.len() || mu.atoms()[k] != y {
                        return f64::INFINITY;
                    }
                    let lo = if k == 0 { 0.0 } else { cum[k - 1] };
                    (lo - t).max(t - cum[k]).max(0.0)
                })
                .fold(0.0, f64::max)
        })
        .collect()
}

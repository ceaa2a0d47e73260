use serde::{Deserialize, Serialize};

use super::FieldBundle;
use crate::nonlinearity::NonlinearitySpec;
use crate::{Error, Result, Tolerances};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Monotonicity {
    Increasing,
    Decreasing,
    NonMonotone { node: usize },
}

impl Monotonicity {
    /// `+1`, `−1`, or `None` when not monotone.
    pub fn direction(&self) -> Option<i8> {
        match self {
            Monotonicity::Increasing => Some(1),
            Monotonicity::Decreasing => Some(-1),
            Monotonicity::NonMonotone { .. } => None,
        }
    }
}

/// Forward differences; interior ones need the margin `ε_mono`, the two
/// boundary-adjacent ones only a non-opposite sign.
pub fn check_monotone(field: &FieldBundle, tol: &Tolerances) -> Vec<Monotonicity> {
    field.components.iter().map(|c| component_monotonicity(c, tol.mono)).collect()
}

pub fn component_monotonicity(c: &[f64], eps: f64) -> Monotonicity {
    let n = c.len();
    let total = c[n - 1] - c[0];
    if total == 0.0 {
        return Monotonicity::NonMonotone { node: 0 };
    }
    let s = total.signum();
    for k in 0..n - 1 {
        let d = s * (c[k + 1] - c[k]);
        let ok = if k == 0 || k == n - 2 { d >= 0.0 } else { d > eps };
        if !ok {
            return Monotonicity::NonMonotone { node: k };
        }
    }
    if s > 0.0 {
        Monotonicity::Increasing
    } else {
        Monotonicity::Decreasing
    }
}

/// Directions of all components, or the first non-monotone one as an error.
pub fn directions(field: &FieldBundle, tol: &Tolerances) -> Result<Vec<i8>> {
    check_monotone(field, tol)
        .iter()
        .enumerate()
        .map(|(i, v)| match v {
            Monotonicity::NonMonotone { node } => Err(Error::NotMonotone { component: i + 1, node: *node }),
            v => Ok(v.direction().unwrap()),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum HMonotoneVerdict {
    HMonotone,
    /// `pair` is 1-based; `value = Hᵢⱼ·Δuᵢ·Δuⱼ`.
    Violated {
        node: usize,
        pair: (usize, usize),
        value: f64,
    },
}

impl HMonotoneVerdict {
    pub fn holds(&self) -> bool {
        matches!(self, HMonotoneVerdict::HMonotone)
    }
}

/// Sign of `Hᵢⱼ(u)·Δuᵢ·Δuⱼ` required at every interior node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sense {
    /// Products negative: `ΣVᵢ ≤ H`.
    Below,
    /// Products positive (`−H`-monotone): `ΣVᵢ ≥ H`.
    Above,
}

fn scan(field: &FieldBundle, spec: &NonlinearitySpec, sense: Sense, tol: &Tolerances) -> Result<HMonotoneVerdict> {
    directions(field, tol)?;
    let (m, n) = (field.m(), field.n());
    if spec.m() != m {
        return Err(Error::DimensionMismatch { expected: spec.m(), got: m });
    }
    for k in 1..n - 1 {
        let h = spec.hessian(&field.point(k))?;
        for i in 0..m {
            for j in (i + 1)..m {
                let di = field.components[i][k + 1] - field.components[i][k];
                let dj = field.components[j][k + 1] - field.components[j][k];
                let v = h[i * m + j] * di * dj;
                let ok = match sense {
                    Sense::Below => v < 0.0,
                    Sense::Above => v > 0.0,
                };
                if !ok {
                    return Ok(HMonotoneVerdict::Violated { node: k, pair: (i + 1, j + 1), value: v });
                }
            }
        }
    }
    Ok(HMonotoneVerdict::HMonotone)
}

/// `Hᵢⱼ(u(xₖ))·Δuᵢ(xₖ)·Δuⱼ(xₖ) < 0` at interior nodes for all `i < j`.
pub fn check_h_monotone(field: &FieldBundle, spec: &NonlinearitySpec, tol: &Tolerances) -> Result<HMonotoneVerdict> {
    scan(field, spec, Sense::Below, tol)
}

/// The same test for `−H`.
pub fn check_anti_h_monotone(
    field: &FieldBundle,
    spec: &NonlinearitySpec,
    tol: &Tolerances,
) -> Result<HMonotoneVerdict> {
    scan(field, spec, Sense::Above, tol)
}

/// `Below` if H-monotone, `Above` if (−H)-monotone; otherwise the H-monotone violation.
pub fn classify_sense(
    field: &FieldBundle,
    spec: &NonlinearitySpec,
    tol: &Tolerances,
) -> Result<std::result::Result<Sense, HMonotoneVerdict>> {
    let below = check_h_monotone(field, spec, tol)?;
    if below.holds() {
        return Ok(Ok(Sense::Below));
    }
    if check_anti_h_monotone(field, spec, tol)?.holds() {
        return Ok(Ok(Sense::Above));
    }
    Ok(Err(below))
}

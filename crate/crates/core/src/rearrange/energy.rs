use serde::{Deserialize, Serialize};

use super::field::{trapezoid_weights, BoxField};
use super::rearrangement::{boundary_consistency, equimeasurability_defect, rectangular_rearrangement};
use crate::nonlinearity::NonlinearitySpec;
use crate::pde::FieldBundle;
use crate::{Error, Result, Tolerances};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub dirichlet: f64,
    pub potential: f64,
    pub total: f64,
}

/// `∫ ½Σ|∇uᵢ|² + H(u)` over `Ω × [0,1]`.
///
/// Dirichlet part: per cell, each partial derivative is the mean of the
/// forward differences along the cell edges in that direction, evaluated as a
/// midpoint rule (exact for multilinear fields). Potential part: nodal
/// trapezoid quadrature. Cells and nodes are summed in lexicographic order.
pub fn energy(field: &BoxField, spec: &NonlinearitySpec) -> Result<EnergyBreakdown> {
    let m = field.m();
    if spec.m() != m {
        return Err(Error::DimensionMismatch { expected: spec.m(), got: m });
    }
    let mut dims: Vec<usize> = field.base_axes.iter().map(Vec::len).collect();
    dims.push(field.nv());
    let (mut h, hv) = field.steps();
    h.push(hv);
    let dn = dims.len();
    let mut strides = vec![1usize; dn];
    for d in (0..dn - 1).rev() {
        strides[d] = strides[d + 1] * dims[d + 1];
    }
    let vol: f64 = h.iter().product();
    // Corner offsets of a cell, as flat index shifts, grouped per direction.
    let corners: Vec<Vec<usize>> = (0..dn)
        .map(|d| {
            (0..1usize << dn)
                .filter(|o| o & (1 << d) == 0)
                .map(|o| (0..dn).filter(|e| o & (1 << e) != 0).map(|e| strides[e]).sum())
                .collect()
        })
        .collect();
    let faces = (1usize << (dn - 1)) as f64;

    let mut dirichlet = 0.0;
    let mut cell = vec![0usize; dn];
    let cells: usize = dims.iter().map(|n| n - 1).product();
    for _ in 0..cells {
        let origin: usize = cell.iter().zip(&strides).map(|(c, s)| c * s).sum();
        for c in &field.components {
            let mut g2 = 0.0;
            for d in 0..dn {
                let s: f64 = corners[d].iter().map(|&o| c[origin + o + strides[d]] - c[origin + o]).sum();
                let g = s / (faces * h[d]);
                g2 += g * g;
            }
            dirichlet += 0.5 * vol * g2;
        }
        for d in (0..dn).rev() {
            cell[d] += 1;
            if cell[d] < dims[d] - 1 {
                break;
            }
            cell[d] = 0;
        }
    }

    let wb = field.base_weights();
    let wv = trapezoid_weights(field.nv());
    let scale = field.base_volume();
    let mut potential = 0.0;
    let mut p = vec![0.0; m];
    for (b, &a) in wb.iter().enumerate() {
        for (j, &w) in wv.iter().enumerate() {
            for (i, x) in p.iter_mut().enumerate() {
                *x = field.value(i, b, j);
            }
            potential += a * w * spec.value(&p)?;
        }
    }
    potential *= scale;
    Ok(EnergyBreakdown { dirichlet, potential, total: dirichlet + potential })
}

/// Energy of a profile on `[0,1]` lifted to `base_axes × [0,1]`.
pub fn energy_of_profile(
    profile: &FieldBundle,
    base_axes: Vec<Vec<f64>>,
    spec: &NonlinearitySpec,
) -> Result<EnergyBreakdown> {
    energy(&BoxField::lift(base_axes, profile)?, spec)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyDecreaseReport {
    pub before: EnergyBreakdown,
    pub after: EnergyBreakdown,
    /// `dirichlet(u) − dirichlet(ū)`.
    pub dirichlet_decrease: f64,
    /// `potential(u) − potential(ū)`.
    pub potential_decrease: f64,
    /// Boundary data consistent with the sign pattern of `Hᵢⱼ`; otherwise the
    /// potential decrease is reported but not asserted.
    pub consistent: bool,
    pub already_one_dimensional: bool,
    /// `max |ūᵢ − uᵢ|` for inputs that are already one-dimensional.
    pub identity_gap: Option<f64>,
    pub equimeasurability_defect: Vec<f64>,
    pub directions: Vec<i8>,
    pub pass: bool,
}

/// Energies of `u` and of its rearrangement lifted back to the box.
pub fn verify_energy_decrease(
    field: &BoxField,
    spec: &NonlinearitySpec,
    tol: &Tolerances,
) -> Result<EnergyDecreaseReport> {
    let r = rectangular_rearrangement(field, tol)?;
    let consistent = boundary_consistency(field, spec)?.holds;
    let before = energy(field, spec)?;
    let lifted = BoxField::lift(field.base_axes.clone(), &r.profile)?;
    let after = energy(&lifted, spec)?;
    let dirichlet_decrease = before.dirichlet - after.dirichlet;
    let potential_decrease = before.potential - after.potential;
    let already = field.is_one_dimensional(0.0);
    let identity_gap = already.then(|| {
        (0..field.m())
            .flat_map(|i| field.line(i, 0).iter().zip(&r.profile.components[i]).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max)
    });
    let eps = tol.rearr;
    let mut pass = dirichlet_decrease >= -eps && (!consistent || potential_decrease >= -eps);
    if already {
        pass &= dirichlet_decrease.abs() <= eps && potential_decrease.abs() <= eps;
    }
    Ok(EnergyDecreaseReport {
        before,
        after,
        dirichlet_decrease,
        potential_decrease,
        consistent,
        already_one_dimensional: already,
        identity_gap,
        equimeasurability_defect: equimeasurability_defect(&r),
        directions: r.directions,
        pass,
    })
}

use serde::{Deserialize, Serialize};

use super::certify::{certify, DualityCertificate};
use super::coupling::{solve_monotone, MonotoneCoupling};
use super::marginal::DiscreteMarginal;
use super::potentials::build_potentials_with;
use crate::nonlinearity::{NonlinearitySpec, Orientation};
use crate::pde::{directions, FieldBundle};
use crate::{Error, Result, Tolerances};

/// Support sets closer than this (Hausdorff, max-norm) count as equal.
pub const SUPPORT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PushforwardReport {
    /// Orientation of the pushforward read off the monotone directions.
    pub field_orientation: Vec<i8>,
    pub requested_orientation: Vec<i8>,
    pub support_distance: f64,
    pub max_weight_difference: f64,
    pub matches_monotone: bool,
    pub certificate: DualityCertificate,
    pub pass: bool,
}

/// `(u₁,…,uₘ)#(uniform nodal measure)`, comonotone under `σᵢ = dirᵢ·dir₁`.
pub fn pushforward_coupling(field: &FieldBundle, tol: &Tolerances) -> Result<MonotoneCoupling> {
    let dirs = directions(field, tol)?;
    let sigma: Vec<i8> = dirs.iter().map(|d| d * dirs[0]).collect();
    let n = field.n();
    MonotoneCoupling::from_points(field.points(), vec![1.0 / n as f64; n], Orientation::new(sigma)?)
}

/// Nodal marginals `uᵢ#(uniform nodal measure)`.
pub fn field_marginals(field: &FieldBundle) -> Result<Vec<DiscreteMarginal>> {
    field.components.iter().map(|c| DiscreteMarginal::from_values(c, None)).collect()
}

/// Hausdorff distance between supports (max-norm) and, when the supports pair
/// up one to one, the largest weight difference.
pub fn support_distance(a: &MonotoneCoupling, b: &MonotoneCoupling) -> (f64, f64) {
    let d = |p: &[f64], q: &[f64]| p.iter().zip(q).fold(0.0f64, |acc, (x, y)| acc.max((x - y).abs()));
    let directed = |x: &MonotoneCoupling, y: &MonotoneCoupling| {
        x.support.iter().map(|p| y.support.iter().map(|q| d(p, q)).fold(f64::INFINITY, f64::min)).fold(0.0f64, f64::max)
    };
    let h = directed(a, b).max(directed(b, a));
    let w = if a.len() == b.len() {
        a.weights.iter().zip(&b.weights).fold(0.0f64, |acc, (x, y)| acc.max((x - y).abs()))
    } else {
        f64::INFINITY
    };
    (h, w)
}

/// Compares the pushforward coupling with the monotone coupling of its
/// marginals under `orientation` and certifies the pushforward.
pub fn verify_pushforward_optimality(
    field: &FieldBundle,
    spec: &NonlinearitySpec,
    orientation: &Orientation,
    resolution: usize,
    tol: &Tolerances,
) -> Result<PushforwardReport> {
    if orientation.len() != field.m() {
        return Err(Error::DimensionMismatch { expected: field.m(), got: orientation.len() });
    }
    let push = pushforward_coupling(field, tol)?;
    let mono = solve_monotone(&field_marginals(field)?, orientation)?;
    let (dist, dw) = support_distance(&push, &mono);
    let matches_monotone = dist <= SUPPORT_TOL && dw <= 1e-12;
    let pot = build_potentials_with(&push, spec, resolution)?;
    let certificate = certify(&push, &pot, spec, resolution, tol)?;
    Ok(PushforwardReport {
        field_orientation: push.orientation.as_slice().to_vec(),
        requested_orientation: orientation.as_slice().to_vec(),
        support_distance: dist,
        max_weight_difference: dw,
        matches_monotone,
        pass: matches_monotone && certificate.pass,
        certificate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nonlinearity::{registry, BoxDomain, PairwiseSum};
    use crate::pde::Mesh1D;

    fn tanh(x: f64) -> f64 {
        (x / 2f64.sqrt()).tanh()
    }

    #[test]
    fn diagonal_field_certifies() {
        let mesh = Mesh1D::symmetric(10.0, 101).unwrap();
        let f = FieldBundle::from_fn(mesh, &[&tanh, &tanh]).unwrap();
        let spec = registry::build("ac-quadratic", 2).unwrap();
        let r = verify_pushforward_optimality(&f, &spec, &Orientation::ones(2), 33, &Tolerances::default()).unwrap();
        assert!(r.pass, "{r:?}");
        assert_eq!(r.support_distance, 0.0);
    }

    #[test]
    fn antitone_field_matches_flipped_orientation() {
        let mesh = Mesh1D::symmetric(10.0, 101).unwrap();
        let f = FieldBundle::from_fn(mesh, &[&tanh, &|x| -tanh(x)]).unwrap();
        let prod = NonlinearitySpec::from_impl(PairwiseSum { m: 2, coef: 1.0 }, BoxDomain::cube(2, -1.0, 1.0).unwrap())
            .unwrap();
        let o = Orientation::new(vec![1, -1]).unwrap();
        let r = verify_pushforward_optimality(&f, &prod, &o, 33, &Tolerances::default()).unwrap();
        assert!(r.pass, "{r:?}");
        assert_eq!(r.field_orientation, vec![1, -1]);
    }

    #[test]
    fn non_h_monotone_field_fails_certificate() {
        let mesh = Mesh1D::symmetric(10.0, 101).unwrap();
        let f = FieldBundle::from_fn(mesh, &[&tanh, &tanh]).unwrap();
        let prod = NonlinearitySpec::from_impl(PairwiseSum { m: 2, coef: 1.0 }, BoxDomain::cube(2, -1.0, 1.0).unwrap())
            .unwrap();
        let o = Orientation::new(vec![1, -1]).unwrap();
        let r = verify_pushforward_optimality(&f, &prod, &o, 33, &Tolerances::default()).unwrap();
        assert!(!r.certificate.pass);
        assert!(!r.matches_monotone);
        assert!(!r.pass);
    }

    #[test]
    fn constant_component_is_rejected() {
        let mesh = Mesh1D::symmetric(1.0, 11).unwrap();
        let f = FieldBundle::from_fn(mesh, &[&tanh, &|_| 0.5]).unwrap();
        assert!(pushforward_coupling(&f, &Tolerances::default()).is_err());
    }
}

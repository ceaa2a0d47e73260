use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::coupling::{coupling_cost, MonotoneCoupling};
use super::potentials::DualPotentials;
use crate::nonlinearity::{linspace, NonlinearitySpec};
use crate::{Error, Result, Tolerances};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualityCertificate {
    pub primal: f64,
    pub dual: f64,
    /// Max over the product grid of `ΣVᵢ(pᵢ) − H(p)`; nonpositive means feasible.
    pub max_violation: f64,
    pub max_support_gap: f64,
    pub resolution: usize,
    pub pass: bool,
}

/// Per-axis grids over the coupling's coordinate ranges (one node for a collapsed range).
pub fn range_axes(coupling: &MonotoneCoupling, resolution: usize) -> Vec<Vec<f64>> {
    (0..coupling.m())
        .map(|i| {
            let (lo, hi) = coupling
                .support
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), s| (a.min(s[i]), b.max(s[i])));
            if lo < hi {
                linspace(lo, hi, resolution.max(2))
            } else {
                vec![lo]
            }
        })
        .collect()
}

/// `max ΣVᵢ(pᵢ) − H(p)` over the tensor product of `axes`; order-independent reduction.
pub fn max_feasibility_violation(
    potentials: &DualPotentials,
    spec: &NonlinearitySpec,
    axes: &[Vec<f64>],
) -> Result<f64> {
    let m = axes.len();
    let total: usize = axes.iter().map(Vec::len).product();
    // Per-axis potential values are tabulated once.
    let vt: Vec<Vec<f64>> =
        axes.iter().zip(&potentials.tables).map(|(a, t)| a.iter().map(|&x| t.eval(x)).collect()).collect();
    (0..total)
        .into_par_iter()
        .map_init(
            || vec![0.0; m],
            |p, mut flat| {
                let mut s = 0.0;
                for i in (0..m).rev() {
                    let n = axes[i].len();
                    let k = flat % n;
                    flat /= n;
                    p[i] = axes[i][k];
                    s += vt[i][k];
                }
                spec.value(p).map(|h| s - h)
            },
        )
        .try_reduce(|| f64::NEG_INFINITY, |a, b| Ok(a.max(b)))
}

/// Feasibility on the product grid, equality on the support and a zero duality gap.
pub fn certify(
    coupling: &MonotoneCoupling,
    potentials: &DualPotentials,
    spec: &NonlinearitySpec,
    resolution: usize,
    tol: &Tolerances,
) -> Result<DualityCertificate> {
    let m = coupling.m();
    if potentials.m() != m || spec.m() != m {
        return Err(Error::DimensionMismatch { expected: m, got: potentials.m() });
    }
    let mut dual = 0.0;
    for i in 0..m {
        let mu = coupling.projection(i)?;
        if !potentials.tables[i].covers(mu.min(), mu.max()) {
            return Err(Error::invalid(format!("potential {} does not cover its marginal", i + 1)));
        }
        dual += mu.atoms().iter().zip(mu.weights()).map(|(&a, &w)| w * potentials.tables[i].eval(a)).sum::<f64>();
    }
    let primal = coupling_cost(coupling, spec)?;
    let mut gap: f64 = 0.0;
    for s in &coupling.support {
        gap = gap.max((spec.value(s)? - potentials.eval_sum(s)).abs());
    }
    let axes = range_axes(coupling, resolution);
    let viol = max_feasibility_violation(potentials, spec, &axes)?;
    let pass = viol <= tol.dual && gap <= tol.dual && (primal - dual).abs() <= tol.dual * (1.0 + primal.abs());
    let cert = DualityCertificate { primal, dual, max_violation: viol, max_support_gap: gap, resolution, pass };
    if [primal, dual, viol, gap].iter().all(|x| x.is_finite()) {
        Ok(cert)
    } else {
        Err(Error::invalid(format!("non-finite certificate: {cert:?}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mmot1d::{build_potentials, solve_monotone, DiscreteMarginal};
    use crate::nonlinearity::{BoxDomain, Orientation, PairwiseSum};

    fn setup(theta: &[i8]) -> (MonotoneCoupling, NonlinearitySpec) {
        let u = DiscreteMarginal::uniform(vec![0.0, 1.0, 2.0]).unwrap();
        let c = solve_monotone(&[u.clone(), u], &Orientation::new(theta.to_vec()).unwrap()).unwrap();
        let s = NonlinearitySpec::from_impl(PairwiseSum { m: 2, coef: -1.0 }, BoxDomain::cube(2, 0.0, 2.0).unwrap())
            .unwrap();
        (c, s)
    }

    #[test]
    fn product_cost_certificate() {
        let (c, s) = setup(&[1, 1]);
        let pot = build_potentials(&c, &s).unwrap();
        let cert = certify(&c, &pot, &s, 33, &Tolerances::default()).unwrap();
        assert!(cert.pass, "{cert:?}");
        assert!((cert.primal + 5.0 / 3.0).abs() < 1e-14);
        assert!((cert.dual + 5.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn wrong_orientation_fails() {
        let (c, s) = setup(&[1, -1]);
        let pot = build_potentials(&c, &s).unwrap();
        let cert = certify(&c, &pot, &s, 33, &Tolerances::default()).unwrap();
        assert!(!cert.pass);
        assert!(cert.max_violation > 1e-3);
    }

    #[test]
    fn grid_order_is_lexicographic_independent() {
        let (c, s) = setup(&[1, 1]);
        let pot = build_potentials(&c, &s).unwrap();
        let a = max_feasibility_violation(&pot, &s, &range_axes(&c, 17)).unwrap();
        let b = max_feasibility_violation(&pot, &s, &range_axes(&c, 17)).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }
}

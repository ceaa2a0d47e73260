use serde::{Deserialize, Serialize};

use super::marginal::{DiscreteMarginal, MERGE_TOL};
use crate::nonlinearity::{NonlinearitySpec, Orientation};
use crate::{Error, Result};

/// Weighted support of a coupling that is comonotone after the flips `qᵢ = σᵢpᵢ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotoneCoupling {
    pub support: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    pub orientation: Orientation,
}

impl MonotoneCoupling {
    pub fn new(support: Vec<Vec<f64>>, weights: Vec<f64>, orientation: Orientation) -> Result<Self> {
        let m = orientation.len();
        if support.is_empty() || support.len() != weights.len() {
            return Err(Error::invalid("coupling needs equally many support tuples and weights"));
        }
        if support.iter().any(|s| s.len() != m || s.iter().any(|x| !x.is_finite())) {
            return Err(Error::invalid(format!("support tuples must have {m} finite entries")));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::invalid("coupling weights must be positive"));
        }
        if (weights.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return Err(Error::invalid("coupling weights must sum to 1"));
        }
        let c = Self { support, weights, orientation };
        if let Some(k) = c.comonotone_violation() {
            return Err(Error::invalid(format!("support is not comonotone in flipped coordinates (tuple {k})")));
        }
        Ok(c)
    }

    /// Builds from arbitrary order: sorts by flipped tuples and merges equal tuples.
    pub fn from_points(points: Vec<Vec<f64>>, weights: Vec<f64>, orientation: Orientation) -> Result<Self> {
        if points.len() != weights.len() {
            return Err(Error::DimensionMismatch { expected: points.len(), got: weights.len() });
        }
        let sig: Vec<f64> = (0..orientation.len()).map(|i| orientation.sign(i)).collect();
        let key = |p: &Vec<f64>| -> Vec<f64> { p.iter().zip(&sig).map(|(x, s)| x * s).collect() };
        let mut idx: Vec<usize> = (0..points.len()).collect();
        idx.sort_by(|&a, &b| {
            let (ka, kb) = (key(&points[a]), key(&points[b]));
            ka.iter().zip(&kb).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal)
        });
        let mut support: Vec<Vec<f64>> = Vec::new();
        let mut w: Vec<f64> = Vec::new();
        for k in idx {
            if support.last() == Some(&points[k]) {
                *w.last_mut().unwrap() += weights[k];
            } else {
                support.push(points[k].clone());
                w.push(weights[k]);
            }
        }
        let total: f64 = w.iter().sum();
        w.iter_mut().for_each(|x| *x /= total);
        Self::new(support, w, orientation)
    }

    pub fn m(&self) -> usize {
        self.orientation.len()
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    /// Index of the first tuple breaking coordinatewise monotonicity in flipped coordinates.
    pub fn comonotone_violation(&self) -> Option<usize> {
        let m = self.m();
        (1..self.support.len()).find(|&k| {
            (0..m).any(|i| {
                let s = self.orientation.sign(i);
                s * self.support[k][i] < s * self.support[k - 1][i]
            })
        })
    }

    /// Marginal of coordinate `i`.
    pub fn projection(&self, i: usize) -> Result<DiscreteMarginal> {
        let v: Vec<f64> = self.support.iter().map(|s| s[i]).collect();
        DiscreteMarginal::from_values(&v, Some(&self.weights))
    }

    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let mut head: Vec<String> = (1..=self.m()).map(|i| format!("p{i}")).collect();
        head.push("weight".into());
        wr.write_record(&head)?;
        for (s, w) in self.support.iter().zip(&self.weights) {
            let mut row: Vec<String> = s.iter().map(|x| format!("{x:.17e}")).collect();
            row.push(format!("{w:.17e}"));
            wr.write_record(&row)?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// Union of cumulative breakpoints, merged within `MERGE_TOL`, last forced to 1.
fn mass_levels(marginals: &[DiscreteMarginal]) -> Vec<f64> {
    let mut all: Vec<f64> = marginals.iter().flat_map(|m| m.cumulative()).collect();
    all.sort_by(f64::total_cmp);
    let mut levels: Vec<f64> = Vec::with_capacity(all.len());
    for t in all {
        if t >= 1.0 - MERGE_TOL {
            continue;
        }
        match levels.last() {
            Some(&l) if t - l <= MERGE_TOL => {}
            _ => levels.push(t),
        }
    }
    levels.push(1.0);
    levels
}

/// Simultaneous quantile coupling in the flipped coordinates `qᵢ = σᵢpᵢ`.
pub fn solve_monotone(marginals: &[DiscreteMarginal], orientation: &Orientation) -> Result<MonotoneCoupling> {
    if marginals.len() < 2 {
        return Err(Error::invalid("need at least two marginals"));
    }
    if orientation.len() != marginals.len() {
        return Err(Error::DimensionMismatch { expected: marginals.len(), got: orientation.len() });
    }
    let flipped: Vec<DiscreteMarginal> =
        marginals.iter().zip(orientation.as_slice()).map(|(m, &s)| m.flipped(s)).collect();
    let cums: Vec<Vec<f64>> = flipped.iter().map(|m| m.cumulative()).collect();
    let levels = mass_levels(&flipped);
    let mut support = Vec::with_capacity(levels.len());
    let mut weights = Vec::with_capacity(levels.len());
    let mut prev = 0.0;
    for &t in &levels {
        let mid = 0.5 * (prev + t);
        let tuple: Vec<f64> = flipped
            .iter()
            .zip(&cums)
            .zip(orientation.as_slice())
            .map(|((m, c), &s)| {
                let k = c.partition_point(|&x| x < mid).min(m.len() - 1);
                f64::from(s) * m.atoms()[k]
            })
            .collect();
        let w = t - prev;
        prev = t;
        if support.last() == Some(&tuple) {
            *weights.last_mut().unwrap() += w;
        } else {
            support.push(tuple);
            weights.push(w);
        }
    }
    MonotoneCoupling::new(support, weights, orientation.clone())
}

/// `Σₖ wₖ H(sₖ)`.
pub fn coupling_cost(coupling: &MonotoneCoupling, spec: &NonlinearitySpec) -> Result<f64> {
    plan_cost(&coupling.support, &coupling.weights, spec)
}

/// Cost of an arbitrary weighted plan.
pub fn plan_cost(support: &[Vec<f64>], weights: &[f64], spec: &NonlinearitySpec) -> Result<f64> {
    let mut s = 0.0;
    for (p, w) in support.iter().zip(weights) {
        s += w * spec.value(p)?;
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nonlinearity::{BoxDomain, PairwiseSum, QuadraticForm};
    use proptest::prelude::*;

    fn u(a: &[f64]) -> DiscreteMarginal {
        DiscreteMarginal::uniform(a.to_vec()).unwrap()
    }

    fn o(v: &[i8]) -> Orientation {
        Orientation::new(v.to_vec()).unwrap()
    }

    #[test]
    fn diagonal_and_antitone() {
        let c = solve_monotone(&[u(&[0., 1., 2.]), u(&[0., 1., 2.])], &o(&[1, 1])).unwrap();
        assert_eq!(c.support, vec![vec![0., 0.], vec![1., 1.], vec![2., 2.]]);
        assert!(c.weights.iter().all(|w| (w - 1.0 / 3.0).abs() < 1e-15));
        let c = solve_monotone(&[u(&[0., 1., 2.]), u(&[0., 1., 2.])], &o(&[1, -1])).unwrap();
        assert_eq!(c.support, vec![vec![0., 2.], vec![1., 1.], vec![2., 0.]]);
        let c = solve_monotone(&[u(&[0., 1.]), u(&[0., 1.]), u(&[0., 1.])], &o(&[1, 1, 1])).unwrap();
        assert_eq!(c.support, vec![vec![0., 0., 0.], vec![1., 1., 1.]]);
    }

    #[test]
    fn costs() {
        let d = BoxDomain::cube(2, 0.0, 2.0).unwrap();
        let neg = NonlinearitySpec::from_impl(PairwiseSum { m: 2, coef: -1.0 }, d.clone()).unwrap();
        let c = solve_monotone(&[u(&[0., 1., 2.]), u(&[0., 1., 2.])], &o(&[1, 1])).unwrap();
        assert!((coupling_cost(&c, &neg).unwrap() + 5.0 / 3.0).abs() < 1e-15);
        let sq = NonlinearitySpec::from_impl(QuadraticForm::new(2, vec![1., -1., -1., 1.]).unwrap(), d).unwrap();
        assert_eq!(coupling_cost(&c, &sq).unwrap(), 0.0);
        let a = solve_monotone(&[u(&[0., 1., 2.]), u(&[0., 1., 2.])], &o(&[1, -1])).unwrap();
        assert!((coupling_cost(&a, &neg).unwrap() + 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn mismatched_lengths_rejected() {
        assert!(solve_monotone(&[u(&[0.]), u(&[1.])], &o(&[1, 1, 1])).is_err());
    }

    #[test]
    fn unequal_weights_split_slices() {
        let a = DiscreteMarginal::new(vec![0., 1.], vec![0.25, 0.75]).unwrap();
        let b = DiscreteMarginal::new(vec![0., 1.], vec![0.5, 0.5]).unwrap();
        let c = solve_monotone(&[a, b], &o(&[1, 1])).unwrap();
        assert_eq!(c.support, vec![vec![0., 0.], vec![1., 0.], vec![1., 1.]]);
        assert!((c.weights[1] - 0.25).abs() < 1e-15);
    }

    fn marginal_strategy() -> impl Strategy<Value = DiscreteMarginal> {
        prop::collection::vec((-20i32..20, 1u32..5), 1..7).prop_filter_map("distinct", |v| {
            let vals: Vec<f64> = v.iter().map(|x| f64::from(x.0) / 4.0).collect();
            let ws: Vec<f64> = v.iter().map(|x| f64::from(x.1)).collect();
            DiscreteMarginal::from_values(&vals, Some(&ws)).ok()
        })
    }

    proptest! {
        #[test]
        fn marginals_are_conserved(ms in prop::collection::vec(marginal_strategy(), 2..5), signs in prop::collection::vec(prop::bool::ANY, 5)) {
            let th: Vec<i8> = (0..ms.len()).map(|i| if i == 0 || signs[i] { 1 } else { -1 }).collect();
            let c = solve_monotone(&ms, &o(&th)).unwrap();
            prop_assert!(c.comonotone_violation().is_none());
            for (i, m) in ms.iter().enumerate() {
                let p = c.projection(i).unwrap();
                prop_assert_eq!(p.atoms(), m.atoms());
                for (a, b) in p.weights().iter().zip(m.weights()) {
                    prop_assert!((a - b).abs() <= 1e-12);
                }
            }
        }

        #[test]
        fn flip_covariance(ms in prop::collection::vec(marginal_strategy(), 2..4), signs in prop::collection::vec(prop::bool::ANY, 4)) {
            let th: Vec<i8> = (0..ms.len()).map(|i| if i == 0 || signs[i] { 1 } else { -1 }).collect();
            let direct = solve_monotone(&ms, &o(&th)).unwrap();
            let fm: Vec<DiscreteMarginal> = ms.iter().zip(&th).map(|(m, &s)| m.flipped(s)).collect();
            let via = solve_monotone(&fm, &Orientation::ones(ms.len())).unwrap();
            prop_assert_eq!(direct.len(), via.len());
            for (a, b) in direct.support.iter().zip(&via.support) {
                for i in 0..a.len() {
                    prop_assert_eq!(a[i], f64::from(th[i]) * b[i]);
                }
            }
        }
    }
}

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::BoxDomain;
use crate::{Error, Result};

/// Seed used when the caller does not supply one.
pub const DEFAULT_SEED: u64 = 0x5eed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GridStrategy {
    Tensor { per_axis: usize },
    SeededRandom { count: usize, seed: u64 },
    Explicit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSummary {
    pub strategy: String,
    pub seed: Option<u64>,
    pub count: usize,
}

/// Points in a box at which sign conditions are certified.
#[derive(Debug, Clone)]
pub struct SampleGrid {
    pub points: Vec<Vec<f64>>,
    pub strategy: GridStrategy,
}

/// `n` equispaced nodes on `[a, b]`, endpoints included exactly.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![0.5 * (a + b)],
        _ => (0..n).map(|k| if k + 1 == n { b } else { a + (b - a) * k as f64 / (n - 1) as f64 }).collect(),
    }
}

/// Lexicographic tensor product, last axis fastest.
pub fn tensor_product(axes: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let total: usize = axes.iter().map(|a| a.len()).product();
    let mut out = Vec::with_capacity(total);
    let mut idx = vec![0usize; axes.len()];
    if total == 0 {
        return out;
    }
    loop {
        out.push(idx.iter().zip(axes).map(|(&k, a)| a[k]).collect());
        let mut d = axes.len();
        loop {
            if d == 0 {
                return out;
            }
            d -= 1;
            idx[d] += 1;
            if idx[d] < axes[d].len() {
                break;
            }
            idx[d] = 0;
        }
    }
}

impl SampleGrid {
    pub fn tensor(domain: &BoxDomain, per_axis: usize) -> Result<Self> {
        if per_axis < 2 {
            return Err(Error::invalid("tensor grid needs at least 2 points per axis"));
        }
        let axes: Vec<Vec<f64>> = (0..domain.dim()).map(|i| linspace(domain.lo[i], domain.hi[i], per_axis)).collect();
        Ok(Self { points: tensor_product(&axes), strategy: GridStrategy::Tensor { per_axis } })
    }

    pub fn random(domain: &BoxDomain, count: usize, seed: u64) -> Result<Self> {
        if count == 0 {
            return Err(Error::invalid("random grid needs at least one point"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let points = (0..count)
            .map(|_| (0..domain.dim()).map(|i| rng.gen_range(domain.lo[i]..=domain.hi[i])).collect())
            .collect();
        Ok(Self { points, strategy: GridStrategy::SeededRandom { count, seed } })
    }

    /// 16 points per axis for `m ≤ 4`, otherwise 4096 seeded random points.
    pub fn default_for(domain: &BoxDomain, seed: u64) -> Result<Self> {
        if domain.dim() <= 4 {
            Self::tensor(domain, 16)
        } else {
            Self::random(domain, 4096, seed)
        }
    }

    pub fn explicit(points: Vec<Vec<f64>>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::invalid("grid is empty"));
        }
        Ok(Self { points, strategy: GridStrategy::Explicit })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// The same points under `q = σ ⊙ p`, in the same order.
    pub fn reflect(&self, sigma: &[i8]) -> Self {
        let points =
            self.points.iter().map(|p| p.iter().zip(sigma).map(|(x, &s)| f64::from(s) * x).collect()).collect();
        Self { points, strategy: self.strategy.clone() }
    }

    pub fn summary(&self) -> GridSummary {
        match &self.strategy {
            GridStrategy::Tensor { .. } => GridSummary { strategy: "tensor".into(), seed: None, count: self.len() },
            GridStrategy::SeededRandom { seed, .. } => {
                GridSummary { strategy: "seeded-random".into(), seed: Some(*seed), count: self.len() }
            }
            GridStrategy::Explicit => GridSummary { strategy: "explicit".into(), seed: None, count: self.len() },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn tensor_order_is_lexicographic() {
        let pts = tensor_product(&[vec![0.0, 1.0], vec![5.0, 6.0, 7.0]]);
        assert_eq!(pts.len(), 6);
        assert_eq!(pts[0], vec![0.0, 5.0]);
        assert_eq!(pts[1], vec![0.0, 6.0]);
        assert_eq!(pts[3], vec![1.0, 5.0]);
    }

    #[test]
    fn default_grid_switches_to_random_above_four() {
        let b4 = BoxDomain::cube(4, 0.0, 1.0).unwrap();
        assert_eq!(SampleGrid::default_for(&b4, 1).unwrap().len(), 16usize.pow(4));
        let b5 = BoxDomain::cube(5, 0.0, 1.0).unwrap();
        let g = SampleGrid::default_for(&b5, 9).unwrap();
        assert_eq!(g.len(), 4096);
        assert_eq!(g.summary().seed, Some(9));
    }

    proptest! {
        #[test]
        fn random_grid_is_reproducible_and_inside(seed in any::<u64>(), lo in -5.0f64..0.0, w in 0.1f64..3.0) {
            let b = BoxDomain::cube(3, lo, lo + w).unwrap();
            let g1 = SampleGrid::random(&b, 64, seed).unwrap();
            let g2 = SampleGrid::random(&b, 64, seed).unwrap();
            prop_assert_eq!(&g1.points, &g2.points);
            prop_assert!(g1.points.iter().all(|p| b.contains(p)));
        }

        #[test]
        fn tensor_grid_is_inside(lo in -5.0f64..0.0, w in 0.1f64..3.0, n in 2usize..7) {
            let b = BoxDomain::new(vec![lo, lo - 1.0], vec![lo + w, lo + 2.0 * w]).unwrap();
            let g = SampleGrid::tensor(&b, n).unwrap();
            prop_assert_eq!(g.len(), n * n);
            prop_assert!(g.points.iter().all(|p| b.contains(p)));
        }
    }
}

//! Discrete Kantorovich potentials along a monotone support.
//!
//! In flipped coordinates the support is a chain `s₀ ≤ s₁ ≤ …`. Between
//! consecutive tuples the moving coordinates are advanced one at a time; every
//! such ordering telescopes `H` exactly along the chain and, for submodular
//! `H̃`, yields `ΣVᵢ ≤ H̃` on the whole product of table nodes. The tables
//! average all orderings with Shapley weights, which keeps both properties.

use serde::{Deserialize, Serialize};

use super::coupling::MonotoneCoupling;
use crate::nonlinearity::{linspace, NonlinearitySpec};
use crate::{Error, Result};

/// Piecewise-linear function on an increasing grid, constant beyond the ends.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialTable {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
}

impl PotentialTable {
    pub fn new(grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if grid.is_empty() || grid.len() != values.len() {
            return Err(Error::invalid("potential table needs equally many nodes and values"));
        }
        if grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("potential table grid must be strictly increasing"));
        }
        Ok(Self { grid, values })
    }

    pub fn eval(&self, p: f64) -> f64 {
        let g = &self.grid;
        let n = g.len();
        if n == 1 || p <= g[0] {
            return self.values[0];
        }
        if p >= g[n - 1] {
            return self.values[n - 1];
        }
        let k = g.partition_point(|&x| x <= p);
        let (x0, x1) = (g[k - 1], g[k]);
        let t = (p - x0) / (x1 - x0);
        self.values[k - 1] + t * (self.values[k] - self.values[k - 1])
    }

    pub fn is_degenerate(&self) -> bool {
        self.grid.len() == 1
    }

    pub fn covers(&self, lo: f64, hi: f64) -> bool {
        self.grid[0] <= lo && hi <= *self.grid.last().unwrap()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualPotentials {
    pub tables: Vec<PotentialTable>,
    /// Set for coordinates whose support collapses to a single value.
    pub degenerate: Vec<bool>,
}

impl DualPotentials {
    pub fn m(&self) -> usize {
        self.tables.len()
    }

    pub fn eval_sum(&self, p: &[f64]) -> f64 {
        self.tables.iter().zip(p).map(|(t, &x)| t.eval(x)).sum()
    }

    /// Adds `cᵢ` to `Vᵢ`.
    pub fn shifted(&self, c: &[f64]) -> Self {
        let mut out = self.clone();
        for (t, &ci) in out.tables.iter_mut().zip(c) {
            t.values.iter_mut().for_each(|v| *v += ci);
        }
        out
    }
}

/// Per-axis resolution `min(33, ⌊(1.2·10⁶)^{1/m}⌋)`, so the product grid stays ≤ 1.2·10⁶ points.
pub fn default_resolution(m: usize) -> usize {
    let cap = (1.2e6f64).powf(1.0 / m as f64).floor() as usize;
    cap.clamp(2, 33)
}

/// Shapley weight `|S|!(k−|S|−1)!/k!`.
fn shapley_weight(s: usize, k: usize) -> f64 {
    let f = |n: usize| (1..=n).map(|x| x as f64).product::<f64>();
    f(s) * f(k - s - 1) / f(k)
}

pub fn build_potentials(coupling: &MonotoneCoupling, spec: &NonlinearitySpec) -> Result<DualPotentials> {
    build_potentials_with(coupling, spec, default_resolution(coupling.m()))
}

/// Table nodes are the support coordinates together with `resolution`
/// equispaced nodes over each coordinate's range.
pub fn build_potentials_with(
    coupling: &MonotoneCoupling,
    spec: &NonlinearitySpec,
    resolution: usize,
) -> Result<DualPotentials> {
    let m = coupling.m();
    if spec.m() != m {
        return Err(Error::DimensionMismatch { expected: spec.m(), got: m });
    }
    let sig: Vec<f64> = (0..m).map(|i| coupling.orientation.sign(i)).collect();

    // Nodes in p coordinates, then their flipped (ascending) copies.
    let mut nodes_p: Vec<Vec<f64>> = Vec::with_capacity(m);
    for i in 0..m {
        let mut v: Vec<f64> = coupling.support.iter().map(|s| s[i]).collect();
        let (lo, hi) = v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
        if lo < hi {
            v.extend(linspace(lo, hi, resolution.max(2)));
        }
        v.sort_by(f64::total_cmp);
        v.dedup();
        nodes_p.push(v);
    }
    let nodes_q: Vec<Vec<f64>> = nodes_p
        .iter()
        .zip(&sig)
        .map(|(v, &s)| if s > 0.0 { v.clone() } else { v.iter().rev().map(|x| -x).collect() })
        .collect();
    let index_of = |i: usize, q: f64| -> usize {
        let k = nodes_q[i].partition_point(|&x| x < q);
        debug_assert!(nodes_q[i][k] == q);
        k
    };
    let chain: Vec<Vec<usize>> =
        coupling.support.iter().map(|s| (0..m).map(|i| index_of(i, sig[i] * s[i])).collect()).collect();
    let h_q = |q: &[f64]| -> Result<f64> {
        let p: Vec<f64> = q.iter().zip(&sig).map(|(x, s)| x * s).collect();
        spec.value(&p)
    };

    let mut vals: Vec<Vec<f64>> = nodes_q.iter().map(|v| vec![f64::NAN; v.len()]).collect();
    for (i, v) in vals.iter_mut().enumerate() {
        if chain[0][i] != 0 {
            return Err(Error::invalid("support does not start at the lower corner of its range"));
        }
        v[0] = 0.0;
    }
    let mut ctx = vec![0.0; m];
    for step in chain.windows(2) {
        let (a, b) = (&step[0], &step[1]);
        let movers: Vec<usize> = (0..m).filter(|&i| a[i] != b[i]).collect();
        let k = movers.len();
        for (mi, &i) in movers.iter().enumerate() {
            let others: Vec<usize> = movers.iter().enumerate().filter(|&(x, _)| x != mi).map(|(_, &j)| j).collect();
            let base = vals[i][a[i]];
            let mut incr = vec![0.0; b[i] - a[i]];
            for mask in 0u32..(1u32 << others.len()) {
                let w = shapley_weight(mask.count_ones() as usize, k);
                for j in 0..m {
                    ctx[j] = nodes_q[j][a[j]];
                }
                for (bit, &j) in others.iter().enumerate() {
                    if mask & (1 << bit) != 0 {
                        ctx[j] = nodes_q[j][b[j]];
                    }
                }
                let h0 = h_q(&ctx)?;
                for (r, inc) in incr.iter_mut().enumerate() {
                    ctx[i] = nodes_q[i][a[i] + 1 + r];
                    *inc += w * (h_q(&ctx)? - h0);
                }
            }
            for (r, inc) in incr.into_iter().enumerate() {
                vals[i][a[i] + 1 + r] = base + inc;
            }
        }
    }
    let first: Vec<f64> = (0..m).map(|i| nodes_q[i][0]).collect();
    let shift = h_q(&first)?;
    vals[0].iter_mut().for_each(|v| *v += shift);

    let mut tables = Vec::with_capacity(m);
    let mut degenerate = Vec::with_capacity(m);
    for i in 0..m {
        if vals[i].iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("potential {} left unassigned nodes", i + 1)));
        }
        let values = if sig[i] > 0.0 { vals[i].clone() } else { vals[i].iter().rev().copied().collect() };
        degenerate.push(nodes_p[i].len() == 1);
        tables.push(PotentialTable::new(nodes_p[i].clone(), values)?);
    }
    Ok(DualPotentials { tables, degenerate })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mmot1d::{solve_monotone, DiscreteMarginal};
    use crate::nonlinearity::{BoxDomain, Orientation, PairwiseSum};

    fn neg_product() -> NonlinearitySpec {
        NonlinearitySpec::from_impl(PairwiseSum { m: 2, coef: -1.0 }, BoxDomain::cube(2, 0.0, 2.0).unwrap()).unwrap()
    }

    #[test]
    fn shapley_weights_sum_to_one() {
        for k in 1..6 {
            let mut s = 0.0;
            for size in 0..k {
                let binom = (0..size).fold(1.0, |acc, x| acc * (k - 1 - x) as f64 / (x + 1) as f64);
                s += binom * shapley_weight(size, k);
            }
            assert!((s - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn three_atom_tables_by_hand() {
        // Support (0,0),(1,1),(2,2), H = −p₁p₂. Each step moves both
        // coordinates by 1; averaging the two orders gives
        // ΔV₁ = ΔV₂ = −½(H-increment split) so V₁ = V₂ = −p²/2 at the atoms.
        let u = DiscreteMarginal::uniform(vec![0.0, 1.0, 2.0]).unwrap();
        let c = solve_monotone(&[u.clone(), u], &Orientation::ones(2)).unwrap();
        let pot = build_potentials_with(&c, &neg_product(), 3).unwrap();
        for i in 0..2 {
            assert_eq!(pot.tables[i].grid, vec![0.0, 1.0, 2.0]);
            for (x, v) in pot.tables[i].grid.iter().zip(&pot.tables[i].values) {
                assert!((v + 0.5 * x * x).abs() < 1e-15);
            }
        }
        for s in &c.support {
            assert!((pot.eval_sum(s) - neg_product().value(s).unwrap()).abs() < 1e-15);
        }
    }

    #[test]
    fn single_atom_is_flagged() {
        let d = DiscreteMarginal::uniform(vec![0.5]).unwrap();
        let c = solve_monotone(&[d.clone(), d], &Orientation::ones(2)).unwrap();
        let pot = build_potentials(&c, &neg_product()).unwrap();
        assert_eq!(pot.degenerate, vec![true, true]);
        assert!((pot.eval_sum(&[0.5, 0.5]) + 0.25).abs() < 1e-15);
    }

    #[test]
    fn interpolation_is_linear_and_clamped() {
        let t = PotentialTable::new(vec![0.0, 1.0, 3.0], vec![0.0, 2.0, 0.0]).unwrap();
        assert_eq!(t.eval(0.5), 1.0);
        assert_eq!(t.eval(2.0), 1.0);
        assert_eq!(t.eval(-1.0), 0.0);
        assert_eq!(t.eval(5.0), 0.0);
        assert_eq!(t.eval(1.0), 2.0);
    }

    #[test]
    fn resolution_cap() {
        assert_eq!(default_resolution(2), 33);
        assert_eq!(default_resolution(4), 33);
        assert_eq!(default_resolution(5), 16);
        assert!(default_resolution(5).pow(5) as f64 <= 1.2e6);
    }
}

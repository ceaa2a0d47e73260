//! Exhaustive search over permutation couplings of uniform marginals.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::marginal::DiscreteMarginal;
use crate::nonlinearity::NonlinearitySpec;
use crate::{Error, Result};

pub const MAX_ATOMS: usize = 6;
pub const MAX_MARGINALS: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub min_cost: f64,
    /// `argmin[j]` is the permutation applied to marginal `j+2`.
    pub argmin: Vec<Vec<usize>>,
    pub unique: bool,
    pub enumerated: usize,
}

/// All permutations of `0..n` in lexicographic order.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut p: Vec<usize> = (0..n).collect();
    let mut out = vec![p.clone()];
    loop {
        let Some(i) = (1..n).rev().find(|&i| p[i - 1] < p[i]) else { return out };
        let j = (i..n).rev().find(|&j| p[j] > p[i - 1]).unwrap();
        p.swap(i - 1, j);
        p[i..].reverse();
        out.push(p.clone());
    }
}

/// Minimum of `(1/n) Σₖ H(x₁ₖ, x₂,π₂(k), …)` over all `(π₂, …, πₘ)`.
///
/// Ties keep the lexicographically smallest tuple of permutations.
pub fn brute_force_oracle(marginals: &[DiscreteMarginal], spec: &NonlinearitySpec) -> Result<OracleResult> {
    let m = marginals.len();
    if m < 2 || spec.m() != m {
        return Err(Error::DimensionMismatch { expected: spec.m(), got: m });
    }
    let n = marginals[0].len();
    if m > MAX_MARGINALS || n > MAX_ATOMS {
        return Err(Error::BoundExceeded(format!(
            "oracle enumerates (n!)^(m-1) couplings and is limited to n <= {MAX_ATOMS}, m <= {MAX_MARGINALS}; got n = {n}, m = {m}"
        )));
    }
    for mu in marginals {
        let uniform = mu.weights().iter().all(|w| (w - 1.0 / n as f64).abs() <= 1e-12);
        if mu.len() != n || !uniform {
            return Err(Error::invalid("oracle needs uniform marginals with equal atom counts"));
        }
    }
    let perms = permutations(n);
    let np = perms.len();
    let total = np.pow((m - 1) as u32);
    let cost = |flat: usize| -> Result<f64> {
        let mut idx = vec![0usize; m - 1];
        let mut f = flat;
        for slot in idx.iter_mut().rev() {
            *slot = f % np;
            f /= np;
        }
        let mut p = vec![0.0; m];
        let mut s = 0.0;
        for k in 0..n {
            p[0] = marginals[0].atoms()[k];
            for j in 1..m {
                p[j] = marginals[j].atoms()[perms[idx[j - 1]][k]];
            }
            s += spec.value(&p)?;
        }
        Ok(s / n as f64)
    };
    // Chunks are scanned in order so the first strict minimum wins.
    let chunk = np.max(1);
    let best: Vec<Result<(f64, usize, usize)>> = (0..total.div_ceil(chunk))
        .into_par_iter()
        .map(|c| {
            let mut best = (f64::INFINITY, usize::MAX, 0usize);
            for flat in c * chunk..((c + 1) * chunk).min(total) {
                let v = cost(flat)?;
                if v < best.0 {
                    best = (v, flat, 1);
                } else if v == best.0 {
                    best.2 += 1;
                }
            }
            Ok(best)
        })
        .collect();
    let mut overall = (f64::INFINITY, usize::MAX, 0usize);
    for b in best {
        let b = b?;
        if b.0 < overall.0 {
            overall = b;
        } else if b.0 == overall.0 {
            overall.2 += b.2;
        }
    }
    let mut f = overall.1;
    let mut argmin = vec![Vec::new(); m - 1];
    for slot in argmin.iter_mut().rev() {
        *slot = perms[f % np].clone();
        f /= np;
    }
    Ok(OracleResult { min_cost: overall.0, argmin, unique: overall.2 == 1, enumerated: total })
}

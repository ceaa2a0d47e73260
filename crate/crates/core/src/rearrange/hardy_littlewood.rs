use serde::{Deserialize, Serialize};

use crate::nonlinearity::{check_submodular, BoxDomain, NonlinearitySpec, SampleGrid};
use crate::{Error, Result, Tolerances};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HlReport {
    /// `Σₖ H(u₁*(k), …, uₘ*(k))` with every vector sorted decreasingly.
    pub sorted_sum: f64,
    pub unsorted_sum: f64,
    pub pass: bool,
}

/// Both sums without any precondition on `H`.
pub fn hl_sums(vectors: &[Vec<f64>], spec: &NonlinearitySpec) -> Result<(f64, f64)> {
    let m = vectors.len();
    if spec.m() != m {
        return Err(Error::DimensionMismatch { expected: spec.m(), got: m });
    }
    let k = vectors.first().map_or(0, Vec::len);
    if k == 0 || vectors.iter().any(|v| v.len() != k || v.iter().any(|x| !x.is_finite())) {
        return Err(Error::invalid("vectors must be non-empty, finite and equally long"));
    }
    let sorted: Vec<Vec<f64>> = vectors
        .iter()
        .map(|v| {
            let mut s = v.clone();
            s.sort_by(|a, b| b.total_cmp(a));
            s
        })
        .collect();
    let sum = |vs: &[Vec<f64>]| -> Result<f64> {
        let mut p = vec![0.0; m];
        let mut total = 0.0;
        for idx in 0..k {
            for (x, v) in p.iter_mut().zip(vs) {
                *x = v[idx];
            }
            total += spec.value(&p)?;
        }
        Ok(total)
    };
    Ok((sum(&sorted)?, sum(vectors)?))
}

/// `Σ H(u*) ≤ Σ H(u) + ε_rearr`; refuses non-submodular `H` on the bounding
/// box of the data, where the inequality can fail.
pub fn hl_inequality_check(vectors: &[Vec<f64>], spec: &NonlinearitySpec, tol: &Tolerances) -> Result<HlReport> {
    let (sorted_sum, unsorted_sum) = hl_sums(vectors, spec)?;
    let points: Vec<Vec<f64>> = (0..vectors[0].len()).map(|k| vectors.iter().map(|v| v[k]).collect()).collect();
    let bounding = spec.with_domain(BoxDomain::bounding(&points)?)?;
    let grid = SampleGrid::default_for(&bounding.domain, crate::nonlinearity::DEFAULT_SEED)?;
    let sub = check_submodular(&bounding, &grid, tol)?;
    if !sub.holds() {
        return Err(Error::NotSubmodular(serde_json::to_string(&sub.witnesses)?));
    }
    Ok(HlReport { sorted_sum, unsorted_sum, pass: sorted_sum <= unsorted_sum + tol.rearr })
}

//! Grid-certified sign classification of mixed second derivatives.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{GridSummary, NonlinearitySpec, Orientation, SampleGrid};
use crate::{Error, Result, Tolerances};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Property {
    Orientable,
    Compatible,
    Submodular,
}

impl Property {
    fn as_str(self) -> &'static str {
        match self {
            Property::Orientable => "orientable",
            Property::Compatible => "compatible",
            Property::Submodular => "submodular",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Holds,
    Fails,
    Degenerate,
}

/// A grid point at which a sign condition failed. Indices are 1-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub test: String,
    pub point: Vec<f64>,
    pub pair_or_triple: Vec<usize>,
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub increments: Option<[f64; 2]>,
}

impl Witness {
    fn new(test: &str, point: &[f64], idx: &[usize], value: f64) -> Self {
        Self {
            test: test.into(),
            point: point.to_vec(),
            pair_or_triple: idx.iter().map(|i| i + 1).collect(),
            value,
            increments: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Classification {
    pub property: Property,
    /// `orientable`, `not_orientable`, `degenerate`, and likewise for the other properties.
    pub verdict: String,
    #[serde(skip)]
    pub outcome: Option<Verdict>,
    pub theta: Option<Vec<i8>>,
    pub witnesses: Vec<Witness>,
    pub grid: GridSummary,
    /// Set when the defining condition quantifies over an empty index set.
    pub vacuous: bool,
}

impl Classification {
    fn build(
        property: Property,
        outcome: Verdict,
        theta: Option<Vec<i8>>,
        witnesses: Vec<Witness>,
        grid: &SampleGrid,
    ) -> Self {
        let verdict = match outcome {
            Verdict::Holds => property.as_str().to_string(),
            Verdict::Fails => format!("not_{}", property.as_str()),
            Verdict::Degenerate => "degenerate".to_string(),
        };
        Self { property, verdict, outcome: Some(outcome), theta, witnesses, grid: grid.summary(), vacuous: false }
    }

    pub fn outcome(&self) -> Verdict {
        self.outcome.unwrap_or_else(|| match self.verdict.as_str() {
            "degenerate" => Verdict::Degenerate,
            v if v.starts_with("not_") => Verdict::Fails,
            _ => Verdict::Holds,
        })
    }

    pub fn holds(&self) -> bool {
        self.outcome() == Verdict::Holds
    }
}

fn precheck(spec: &NonlinearitySpec, grid: &SampleGrid) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::invalid("sample grid is empty"));
    }
    let slack = |i: usize| 1e-12 * (1.0 + spec.domain.lo[i].abs().max(spec.domain.hi[i].abs()));
    for p in &grid.points {
        if p.len() != spec.m() {
            return Err(Error::DimensionMismatch { expected: spec.m(), got: p.len() });
        }
        let inside =
            (0..spec.m()).all(|i| p[i] >= spec.domain.lo[i] - slack(i) && p[i] <= spec.domain.hi[i] + slack(i));
        if !inside {
            return Err(Error::invalid(format!("grid point {p:?} lies outside the domain box")));
        }
    }
    Ok(())
}

/// First issue in grid order; the scan is parallel but the result is order independent.
fn first_issue<T, F>(grid: &SampleGrid, f: F) -> Result<Option<T>>
where
    T: Send,
    F: Fn(&[f64]) -> Result<Option<T>> + Sync,
{
    grid.points.par_iter().find_map_first(|p| f(p).transpose()).transpose()
}

fn reference_signs(spec: &NonlinearitySpec, tol: &Tolerances) -> Result<std::result::Result<Vec<i8>, Witness>> {
    let m = spec.m();
    let c = spec.domain.center();
    let h = spec.hessian(&c)?;
    let mut sigma = vec![1i8; m];
    for i in 1..m {
        let v = h[i];
        if v.abs() <= tol.sign {
            return Ok(Err(Witness::new("reference", &c, &[0, i], v)));
        }
        sigma[i] = if v < 0.0 { 1 } else { -1 };
    }
    Ok(Ok(sigma))
}

/// Orientability with candidate `θ₁ = 1`, `θᵢ = −sign H₁ᵢ(center)`, verified on the grid.
pub fn check_orientable(spec: &NonlinearitySpec, grid: &SampleGrid, tol: &Tolerances) -> Result<Classification> {
    precheck(spec, grid)?;
    let m = spec.m();
    let theta = match reference_signs(spec, tol)? {
        Ok(t) => t,
        Err(w) => return Ok(Classification::build(Property::Orientable, Verdict::Degenerate, None, vec![w], grid)),
    };
    let issue = first_issue(grid, |p| {
        let h = spec.hessian(p)?;
        for i in 0..m {
            for j in (i + 1)..m {
                let v = f64::from(theta[i] * theta[j]) * h[i * m + j];
                if !(v < -tol.sign) {
                    return Ok(Some(Witness::new("sign", p, &[i, j], v)));
                }
            }
        }
        Ok(None)
    })?;
    Ok(match issue {
        None => Classification::build(Property::Orientable, Verdict::Holds, Some(theta), vec![], grid),
        Some(w) => Classification::build(Property::Orientable, Verdict::Fails, Some(theta), vec![w], grid),
    })
}

/// Compatibility: `Hᵢⱼ·Hₖⱼ⁻¹·Hₖᵢ < −ε` over ordered distinct triples.
///
/// A change of sign of some `Hᵢⱼ` between grid points forces a zero on the
/// connecting segment, so it is reported as degenerate.
pub fn check_compatible(spec: &NonlinearitySpec, grid: &SampleGrid, tol: &Tolerances) -> Result<Classification> {
    precheck(spec, grid)?;
    let m = spec.m();
    if m == 2 {
        let mut c = Classification::build(Property::Compatible, Verdict::Holds, None, vec![], grid);
        c.vacuous = true;
        return Ok(c);
    }
    let h0 = spec.hessian(&grid.points[0])?;
    let issue = first_issue(grid, |p| {
        let h = spec.hessian(p)?;
        for i in 0..m {
            for j in 0..m {
                for k in 0..m {
                    if i == j || j == k || i == k {
                        continue;
                    }
                    let hkj = h[k * m + j];
                    if hkj.abs() <= tol.sign {
                        return Ok(Some((Verdict::Degenerate, Witness::new("inverse", p, &[k, j], hkj))));
                    }
                    let v = h[i * m + j] / hkj * h[k * m + i];
                    if !(v < -tol.sign) {
                        return Ok(Some((Verdict::Fails, Witness::new("triple", p, &[i, j, k], v))));
                    }
                }
            }
        }
        for i in 0..m {
            for j in (i + 1)..m {
                let (a, b) = (h[i * m + j], h0[i * m + j]);
                if a.signum() != b.signum() {
                    return Ok(Some((Verdict::Degenerate, Witness::new("sign-change", p, &[i, j], a))));
                }
            }
        }
        Ok(None)
    })?;
    Ok(match issue {
        None => Classification::build(Property::Compatible, Verdict::Holds, None, vec![], grid),
        Some((v, w)) => Classification::build(Property::Compatible, v, None, vec![w], grid),
    })
}

/// `H(p+heᵢ+keⱼ) + H(p) − H(p+heᵢ) − H(p+keⱼ)`; `i`, `j` are 0-based.
pub fn four_point_defect(spec: &NonlinearitySpec, p: &[f64], i: usize, j: usize, h: f64, k: f64) -> Result<f64> {
    Ok(four_point_terms(spec, p, i, j, h, k)?.0)
}

fn four_point_terms(spec: &NonlinearitySpec, p: &[f64], i: usize, j: usize, h: f64, k: f64) -> Result<(f64, f64)> {
    let mut q = p.to_vec();
    let h00 = spec.value(&q)?;
    q[i] += h;
    let h10 = spec.value(&q)?;
    q[j] += k;
    let h11 = spec.value(&q)?;
    q[i] = p[i];
    let h01 = spec.value(&q)?;
    let scale = h00.abs().max(h10.abs()).max(h11.abs()).max(h01.abs());
    Ok((h11 + h00 - h10 - h01, scale))
}

/// Smooth criterion `Hᵢⱼ < −ε` plus the four-point test with
/// `h, k ∈ {¼, ½, 1}·width/4`.
pub fn check_submodular(spec: &NonlinearitySpec, grid: &SampleGrid, tol: &Tolerances) -> Result<Classification> {
    precheck(spec, grid)?;
    let m = spec.m();
    let smooth = first_issue(grid, |p| {
        let h = spec.hessian(p)?;
        for i in 0..m {
            for j in (i + 1)..m {
                let v = h[i * m + j];
                if !(v < -tol.sign) {
                    return Ok(Some(Witness::new("smooth", p, &[i, j], v)));
                }
            }
        }
        Ok(None)
    })?;
    let steps: Vec<[f64; 3]> = (0..m)
        .map(|i| {
            let w = spec.domain.width(i) / 4.0;
            [0.25 * w, 0.5 * w, w]
        })
        .collect();
    let discrete = first_issue(grid, |p| {
        for i in 0..m {
            for j in (i + 1)..m {
                for &h in &steps[i] {
                    if p[i] + h > spec.domain.hi[i] {
                        continue;
                    }
                    for &k in &steps[j] {
                        if p[j] + k > spec.domain.hi[j] {
                            continue;
                        }
                        let (d, scale) = four_point_terms(spec, p, i, j, h, k)?;
                        if d > 1e-10 * (1.0 + scale) {
                            let mut w = Witness::new("four-point", p, &[i, j], d);
                            w.increments = Some([h, k]);
                            return Ok(Some(w));
                        }
                    }
                }
            }
        }
        Ok(None)
    })?;
    let witnesses: Vec<Witness> = smooth.into_iter().chain(discrete).collect();
    let verdict = if witnesses.is_empty() { Verdict::Holds } else { Verdict::Fails };
    Ok(Classification::build(Property::Submodular, verdict, None, witnesses, grid))
}

/// Sign flips `σ₁ = 1`, `σᵢ = −sign H₁ᵢ(center)` and the spec of `H(σ ⊙ q)`.
pub fn flip_to_submodular(spec: &NonlinearitySpec, tol: &Tolerances) -> Result<(Orientation, NonlinearitySpec)> {
    match reference_signs(spec, tol)? {
        Ok(sigma) => {
            let flipped = spec.flipped(&sigma)?;
            Ok((Orientation::new(sigma)?, flipped))
        }
        Err(w) => Err(Error::DegenerateSign { index: w.pair_or_triple[1], point: w.point }),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub m: usize,
    pub verdict: String,
    pub theta: Option<Vec<i8>>,
    pub sigma: Option<Vec<i8>>,
    pub orientable: Classification,
    pub compatible: Classification,
    pub submodular_after_flip: Classification,
    pub consistent: bool,
}

/// Runs the three classifiers independently and requires agreement.
///
/// Degenerate counts as failing. For `m = 2` compatibility is vacuous and is
/// left out of the comparison.
pub fn verify_equivalence(spec: &NonlinearitySpec, grid: &SampleGrid, tol: &Tolerances) -> Result<EquivalenceReport> {
    let orientable = check_orientable(spec, grid, tol)?;
    let compatible = check_compatible(spec, grid, tol)?;
    let (sigma, submodular_after_flip) = match flip_to_submodular(spec, tol) {
        Ok((sigma, flipped)) => {
            let g = grid.reflect(sigma.as_slice());
            (Some(sigma.as_slice().to_vec()), check_submodular(&flipped, &g, tol)?)
        }
        Err(Error::DegenerateSign { index, point }) => {
            let w = Witness::new("reference", &point, &[0, index - 1], 0.0);
            (None, Classification::build(Property::Submodular, Verdict::Degenerate, None, vec![w], grid))
        }
        Err(e) => return Err(e),
    };
    let a = orientable.holds();
    let c = compatible.holds();
    let s = submodular_after_flip.holds();
    let consistent = if spec.m() == 2 { a == s } else { a == c && c == s };
    let report = EquivalenceReport {
        m: spec.m(),
        verdict: orientable.verdict.clone(),
        theta: orientable.theta.clone(),
        sigma,
        orientable,
        compatible,
        submodular_after_flip,
        consistent,
    };
    if consistent {
        Ok(report)
    } else {
        Err(Error::InconsistentClassification(serde_json::to_string(&report).unwrap_or_else(|_| format!("{report:?}"))))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub max_hessian_asymmetry: f64,
    pub gradient_steps: [f64; 2],
    pub max_gradient_error: [f64; 2],
    pub pass: bool,
}

/// Hessian symmetry (1e−8 relative) and gradient against central differences
/// of `H` at two step sizes, with the error shrinking like `h²`.
pub fn check_spec_consistency(spec: &NonlinearitySpec, grid: &SampleGrid) -> Result<ConsistencyReport> {
    precheck(spec, grid)?;
    let m = spec.m();
    let steps = [1e-3, 5e-4];
    let per_point: Vec<Result<(f64, [f64; 2])>> = grid
        .points
        .par_iter()
        .map(|p| {
            let h = spec.hessian(p)?;
            let mut asym: f64 = 0.0;
            for i in 0..m {
                for j in (i + 1)..m {
                    let (a, b) = (h[i * m + j], h[j * m + i]);
                    asym = asym.max((a - b).abs() / a.abs().max(b.abs()).max(1.0));
                }
            }
            let g = spec.gradient(p)?;
            let mut errs = [0.0f64; 2];
            let mut q = p.to_vec();
            for (e, &s) in errs.iter_mut().zip(&steps) {
                for i in 0..m {
                    let step = s * p[i].abs().max(1.0);
                    q[i] = p[i] + step;
                    let fp = spec.value(&q)?;
                    q[i] = p[i] - step;
                    let fm = spec.value(&q)?;
                    q[i] = p[i];
                    let fd = (fp - fm) / (2.0 * step);
                    *e = e.max((fd - g[i]).abs() / (1.0 + g[i].abs()));
                }
            }
            Ok((asym, errs))
        })
        .collect();
    let mut asym: f64 = 0.0;
    let mut errs = [0.0f64; 2];
    for r in per_point {
        let (a, e) = r?;
        asym = asym.max(a);
        errs[0] = errs[0].max(e[0]);
        errs[1] = errs[1].max(e[1]);
    }
    let pass = asym <= 1e-8 && errs[1] <= (0.3 * errs[0]).max(1e-8);
    Ok(ConsistencyReport { max_hessian_asymmetry: asym, gradient_steps: steps, max_gradient_error: errs, pass })
}

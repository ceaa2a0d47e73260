//! Non-linearities `H: ℝᵐ → ℝ` on a box and their sign classification.

mod builtins;
mod classify;
mod grid;
pub mod registry;

use std::fmt::Debug;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use builtins::{
    double_well, double_well_d1, double_well_d2, AcLogSumExp, AcQuadratic, Flipped, FnNonlinearity, PairwiseSum,
    QuadraticCoupling, QuadraticForm, Zero,
};
pub use classify::{
    check_compatible, check_orientable, check_spec_consistency, check_submodular, flip_to_submodular,
    four_point_defect, verify_equivalence, Classification, ConsistencyReport, EquivalenceReport, Property, Verdict,
    Witness,
};
pub use grid::{linspace, tensor_product, GridStrategy, GridSummary, SampleGrid, DEFAULT_SEED};

/// A twice differentiable function of `m` real variables.
///
/// Hessians are written row-major into a buffer of length `m*m`.
pub trait Nonlinearity: Send + Sync + Debug {
    fn dim(&self) -> usize;

    fn name(&self) -> &str;

    fn value(&self, p: &[f64]) -> f64;

    fn gradient(&self, p: &[f64], out: &mut [f64]);

    /// Defaults to symmetrized central differences of the gradient.
    fn hessian(&self, p: &[f64], out: &mut [f64]) {
        fd_hessian(self, p, out);
    }
}

/// Central-difference Hessian of `h.gradient`, step `ε^{1/3}·max(1,|pᵢ|)` per axis.
pub fn fd_hessian<H: Nonlinearity + ?Sized>(h: &H, p: &[f64], out: &mut [f64]) {
    let m = p.len();
    let mut q = p.to_vec();
    let mut gp = vec![0.0; m];
    let mut gm = vec![0.0; m];
    let base = f64::EPSILON.cbrt();
    for i in 0..m {
        let step = base * p[i].abs().max(1.0);
        q[i] = p[i] + step;
        h.gradient(&q, &mut gp);
        q[i] = p[i] - step;
        h.gradient(&q, &mut gm);
        q[i] = p[i];
        for r in 0..m {
            out[r * m + i] = (gp[r] - gm[r]) / (2.0 * step);
        }
    }
    for i in 0..m {
        for j in (i + 1)..m {
            let s = 0.5 * (out[i * m + j] + out[j * m + i]);
            out[i * m + j] = s;
            out[j * m + i] = s;
        }
    }
}

/// Closed box `Π [loᵢ, hiᵢ]` with `loᵢ < hiᵢ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxDomain {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoxDomain {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(Error::invalid("box bounds must be non-empty and of equal length"));
        }
        for (i, (a, b)) in lo.iter().zip(&hi).enumerate() {
            if !(a.is_finite() && b.is_finite() && a < b) {
                return Err(Error::invalid(format!("box interval {} is degenerate: [{a}, {b}]", i + 1)));
            }
        }
        Ok(Self { lo, hi })
    }

    pub fn cube(m: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![lo; m], vec![hi; m])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn center(&self) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(a, b)| 0.5 * (a + b)).collect()
    }

    pub fn width(&self, i: usize) -> f64 {
        self.hi[i] - self.lo[i]
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.dim() && p.iter().zip(self.lo.iter().zip(&self.hi)).all(|(x, (a, b))| *a <= *x && *x <= *b)
    }

    /// Image of the box under `q = σ ⊙ p`.
    pub fn reflect(&self, sigma: &[i8]) -> Self {
        let mut lo = self.lo.clone();
        let mut hi = self.hi.clone();
        for i in 0..self.dim() {
            if sigma[i] < 0 {
                lo[i] = -self.hi[i];
                hi[i] = -self.lo[i];
            }
        }
        Self { lo, hi }
    }

    /// Smallest box containing all given points; zero-width axes are padded.
    pub fn bounding(points: &[Vec<f64>]) -> Result<Self> {
        let first = points.first().ok_or_else(|| Error::invalid("no points"))?;
        let mut lo = first.clone();
        let mut hi = first.clone();
        for p in points {
            for i in 0..lo.len() {
                lo[i] = lo[i].min(p[i]);
                hi[i] = hi[i].max(p[i]);
            }
        }
        for i in 0..lo.len() {
            if hi[i] - lo[i] <= 0.0 {
                let pad = 1e-9 * lo[i].abs().max(1.0);
                lo[i] -= pad;
                hi[i] += pad;
            }
        }
        Self::new(lo, hi)
    }
}

/// Sign vector with entries in `{−1, +1}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<i8>", into = "Vec<i8>")]
pub struct Orientation(Vec<i8>);

impl Orientation {
    pub fn new(theta: Vec<i8>) -> Result<Self> {
        if theta.is_empty() || theta.iter().any(|&t| t != 1 && t != -1) {
            return Err(Error::invalid(format!("orientation entries must be ±1: {theta:?}")));
        }
        Ok(Self(theta))
    }

    pub fn ones(m: usize) -> Self {
        Self(vec![1; m])
    }

    pub fn as_slice(&self) -> &[i8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn sign(&self, i: usize) -> f64 {
        f64::from(self.0[i])
    }
}

impl TryFrom<Vec<i8>> for Orientation {
    type Error = Error;
    fn try_from(v: Vec<i8>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<Orientation> for Vec<i8> {
    fn from(o: Orientation) -> Self {
        o.0
    }
}

/// A non-linearity together with the box on which it is classified.
#[derive(Debug, Clone)]
pub struct NonlinearitySpec {
    pub h: Arc<dyn Nonlinearity>,
    pub domain: BoxDomain,
}

impl NonlinearitySpec {
    pub fn new(h: Arc<dyn Nonlinearity>, domain: BoxDomain) -> Result<Self> {
        if h.dim() < 2 {
            return Err(Error::invalid(format!("need m >= 2, got {}", h.dim())));
        }
        if domain.dim() != h.dim() {
            return Err(Error::DimensionMismatch { expected: h.dim(), got: domain.dim() });
        }
        Ok(Self { h, domain })
    }

    pub fn from_impl<H: Nonlinearity + 'static>(h: H, domain: BoxDomain) -> Result<Self> {
        Self::new(Arc::new(h), domain)
    }

    pub fn m(&self) -> usize {
        self.h.dim()
    }

    pub fn name(&self) -> &str {
        self.h.name()
    }

    pub fn with_domain(&self, domain: BoxDomain) -> Result<Self> {
        Self::new(self.h.clone(), domain)
    }

    fn check_dim(&self, p: &[f64]) -> Result<()> {
        if p.len() != self.m() {
            return Err(Error::DimensionMismatch { expected: self.m(), got: p.len() });
        }
        Ok(())
    }

    pub fn value(&self, p: &[f64]) -> Result<f64> {
        self.check_dim(p)?;
        let v = self.h.value(p);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Evaluation { what: "H", point: p.to_vec() })
        }
    }

    pub fn gradient(&self, p: &[f64]) -> Result<Vec<f64>> {
        let mut g = vec![0.0; self.m()];
        self.gradient_into(p, &mut g)?;
        Ok(g)
    }

    pub fn gradient_into(&self, p: &[f64], out: &mut [f64]) -> Result<()> {
        self.check_dim(p)?;
        self.h.gradient(p, out);
        if out.iter().all(|x| x.is_finite()) {
            Ok(())
        } else {
            Err(Error::Evaluation { what: "gradient", point: p.to_vec() })
        }
    }

    pub fn hessian(&self, p: &[f64]) -> Result<Vec<f64>> {
        let m = self.m();
        let mut out = vec![0.0; m * m];
        self.hessian_into(p, &mut out)?;
        Ok(out)
    }

    pub fn hessian_into(&self, p: &[f64], out: &mut [f64]) -> Result<()> {
        self.check_dim(p)?;
        self.h.hessian(p, out);
        if out.iter().all(|x| x.is_finite()) {
            Ok(())
        } else {
            Err(Error::Evaluation { what: "Hessian", point: p.to_vec() })
        }
    }

    /// `H̃(q) = H(σ ⊙ q)` on the reflected box.
    pub fn flipped(&self, sigma: &[i8]) -> Result<Self> {
        let o = Orientation::new(sigma.to_vec())?;
        if o.len() != self.m() {
            return Err(Error::DimensionMismatch { expected: self.m(), got: o.len() });
        }
        Self::new(Arc::new(Flipped::new(self.h.clone(), sigma.to_vec())), self.domain.reflect(sigma))
    }
}

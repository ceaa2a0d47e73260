//! Built-in non-linearities with closed-form derivatives.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Nonlinearity;

/// Double-well `W(p) = ¼(p²−1)²`.
pub fn double_well(p: f64) -> f64 {
    let a = p * p - 1.0;
    0.25 * a * a
}

pub fn double_well_d1(p: f64) -> f64 {
    p * (p * p - 1.0)
}

pub fn double_well_d2(p: f64) -> f64 {
    3.0 * p * p - 1.0
}

/// `H(p) = Σ_{i<j} (pᵢ−pⱼ)² + Σ W(pᵢ)`; every mixed partial equals −2.
#[derive(Debug, Clone)]
pub struct AcQuadratic {
    pub m: usize,
}

impl Nonlinearity for AcQuadratic {
    fn dim(&self) -> usize {
        self.m
    }

    fn name(&self) -> &str {
        "ac-quadratic"
    }

    fn value(&self, p: &[f64]) -> f64 {
        let mut s = 0.0;
        for i in 0..self.m {
            s += double_well(p[i]);
            for j in (i + 1)..self.m {
                let d = p[i] - p[j];
                s += d * d;
            }
        }
        s
    }

    fn gradient(&self, p: &[f64], out: &mut [f64]) {
        let total: f64 = p.iter().sum();
        let mf = self.m as f64;
        for i in 0..self.m {
            // 2Σ_{j≠i}(pᵢ−pⱼ) = 2(m pᵢ − Σp)
            out[i] = 2.0 * (mf * p[i] - total) + double_well_d1(p[i]);
        }
    }

    fn hessian(&self, p: &[f64], out: &mut [f64]) {
        let m = self.m;
        for i in 0..m {
            for j in 0..m {
                out[i * m + j] = if i == j { 2.0 * (m as f64 - 1.0) + double_well_d2(p[i]) } else { -2.0 };
            }
        }
    }
}

/// `H(p) = m·log((1/m) Σ exp W(pᵢ))`, a smooth maximum of the wells.
#[derive(Debug, Clone)]
pub struct AcLogSumExp {
    pub m: usize,
}

impl AcLogSumExp {
    fn softmax(&self, p: &[f64]) -> (Vec<f64>, f64) {
        let w: Vec<f64> = p.iter().map(|&x| double_well(x)).collect();
        let top = w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let e: Vec<f64> = w.iter().map(|x| (x - top).exp()).collect();
        let s: f64 = e.iter().sum();
        let lse = top + (s / self.m as f64).ln();
        (e.into_iter().map(|x| x / s).collect(), lse)
    }
}

impl Nonlinearity for AcLogSumExp {
    fn dim(&self) -> usize {
        self.m
    }

    fn name(&self) -> &str {
        "ac-logsumexp"
    }

    fn value(&self, p: &[f64]) -> f64 {
        self.m as f64 * self.softmax(p).1
    }

    fn gradient(&self, p: &[f64], out: &mut [f64]) {
        let (s, _) = self.softmax(p);
        let mf = self.m as f64;
        for i in 0..self.m {
            out[i] = mf * s[i] * double_well_d1(p[i]);
        }
    }

    fn hessian(&self, p: &[f64], out: &mut [f64]) {
        let (s, _) = self.softmax(p);
        let m = self.m;
        let mf = m as f64;
        let d1: Vec<f64> = p.iter().map(|&x| double_well_d1(x)).collect();
        for i in 0..m {
            for j in 0..m {
                let mut v = -s[i] * s[j] * d1[i] * d1[j];
                if i == j {
                    v += s[i] * (d1[i] * d1[i] + double_well_d2(p[i]));
                }
                out[i * m + j] = mf * v;
            }
        }
    }
}

/// `H(p₁,p₂) = ½ p₁² p₂²`.
#[derive(Debug, Clone, Default)]
pub struct QuadraticCoupling;

impl Nonlinearity for QuadraticCoupling {
    fn dim(&self) -> usize {
        2
    }

    fn name(&self) -> &str {
        "quadratic-coupling"
    }

    fn value(&self, p: &[f64]) -> f64 {
        0.5 * p[0] * p[0] * p[1] * p[1]
    }

    fn gradient(&self, p: &[f64], out: &mut [f64]) {
        out[0] = p[0] * p[1] * p[1];
        out[1] = p[0] * p[0] * p[1];
    }

    fn hessian(&self, p: &[f64], out: &mut [f64]) {
        out[0] = p[1] * p[1];
        out[1] = 2.0 * p[0] * p[1];
        out[2] = out[1];
        out[3] = p[0] * p[0];
    }
}

/// `H(p) = c·Σ_{i<j} pᵢpⱼ`.
#[derive(Debug, Clone)]
pub struct PairwiseSum {
    pub m: usize,
    pub coef: f64,
}

impl Nonlinearity for PairwiseSum {
    fn dim(&self) -> usize {
        self.m
    }

    fn name(&self) -> &str {
        "pairwise-sum"
    }

    fn value(&self, p: &[f64]) -> f64 {
        let mut s = 0.0;
        for i in 0..self.m {
            for j in (i + 1)..self.m {
                s += p[i] * p[j];
            }
        }
        self.coef * s
    }

    fn gradient(&self, p: &[f64], out: &mut [f64]) {
        let total: f64 = p.iter().sum();
        for i in 0..self.m {
            out[i] = self.coef * (total - p[i]);
        }
    }

    fn hessian(&self, _p: &[f64], out: &mut [f64]) {
        let m = self.m;
        for i in 0..m {
            for j in 0..m {
                out[i * m + j] = if i == j { 0.0 } else { self.coef };
            }
        }
    }
}

/// `H(p) = pᵀ A p` with `A` symmetric, stored row-major.
#[derive(Debug, Clone)]
pub struct QuadraticForm {
    pub m: usize,
    pub a: Vec<f64>,
}

impl QuadraticForm {
    pub fn new(m: usize, a: Vec<f64>) -> crate::Result<Self> {
        if a.len() != m * m {
            return Err(crate::Error::DimensionMismatch { expected: m * m, got: a.len() });
        }
        for i in 0..m {
            for j in 0..i {
                if a[i * m + j] != a[j * m + i] {
                    return Err(crate::Error::invalid("quadratic form matrix must be symmetric"));
                }
            }
        }
        Ok(Self { m, a })
    }

    /// Off-diagonal entries uniform in `[−2, −½]`, diagonal uniform in `[−1, 1]`.
    pub fn random_negative(m: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut a = vec![0.0; m * m];
        for i in 0..m {
            a[i * m + i] = rng.gen_range(-1.0..1.0);
            for j in (i + 1)..m {
                let v = rng.gen_range(-2.0..-0.5);
                a[i * m + j] = v;
                a[j * m + i] = v;
            }
        }
        Self { m, a }
    }
}

impl Nonlinearity for QuadraticForm {
    fn dim(&self) -> usize {
        self.m
    }

    fn name(&self) -> &str {
        "quadratic-form"
    }

    fn value(&self, p: &[f64]) -> f64 {
        let m = self.m;
        let mut s = 0.0;
        for i in 0..m {
            for j in 0..m {
                s += p[i] * self.a[i * m + j] * p[j];
            }
        }
        s
    }

    fn gradient(&self, p: &[f64], out: &mut [f64]) {
        let m = self.m;
        for i in 0..m {
            out[i] = 2.0 * (0..m).map(|j| self.a[i * m + j] * p[j]).sum::<f64>();
        }
    }

    fn hessian(&self, _p: &[f64], out: &mut [f64]) {
        for (o, a) in out.iter_mut().zip(&self.a) {
            *o = 2.0 * a;
        }
    }
}

/// `H ≡ 0`.
#[derive(Debug, Clone)]
pub struct Zero {
    pub m: usize,
}

impl Nonlinearity for Zero {
    fn dim(&self) -> usize {
        self.m
    }

    fn name(&self) -> &str {
        "zero"
    }

    fn value(&self, _p: &[f64]) -> f64 {
        0.0
    }

    fn gradient(&self, _p: &[f64], out: &mut [f64]) {
        out.fill(0.0);
    }

    fn hessian(&self, _p: &[f64], out: &mut [f64]) {
        out.fill(0.0);
    }
}

type ValueFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type GradFn = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;

/// Closure-backed non-linearity; the Hessian is synthesized by finite differences.
#[derive(Clone)]
pub struct FnNonlinearity {
    name: String,
    m: usize,
    value: ValueFn,
    gradient: GradFn,
    hessian: Option<GradFn>,
}

impl FnNonlinearity {
    pub fn new(
        name: impl Into<String>,
        m: usize,
        value: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        gradient: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    ) -> Self {
        Self { name: name.into(), m, value: Arc::new(value), gradient: Arc::new(gradient), hessian: None }
    }

    pub fn with_hessian(mut self, hessian: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static) -> Self {
        self.hessian = Some(Arc::new(hessian));
        self
    }
}

impl fmt::Debug for FnNonlinearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnNonlinearity").field("name", &self.name).field("m", &self.m).finish()
    }
}

impl Nonlinearity for FnNonlinearity {
    fn dim(&self) -> usize {
        self.m
    }

    fn name(&self) -> &str {
        &self.name
    }

    fn value(&self, p: &[f64]) -> f64 {
        (self.value)(p)
    }

    fn gradient(&self, p: &[f64], out: &mut [f64]) {
        (self.gradient)(p, out)
    }

    fn hessian(&self, p: &[f64], out: &mut [f64]) {
        match &self.hessian {
            Some(h) => h(p, out),
            None => super::fd_hessian(self, p, out),
        }
    }
}

/// `H̃(q) = H(σ ⊙ q)`.
#[derive(Debug, Clone)]
pub struct Flipped {
    inner: Arc<dyn Nonlinearity>,
    sigma: Vec<i8>,
    name: String,
}

impl Flipped {
    pub fn new(inner: Arc<dyn Nonlinearity>, sigma: Vec<i8>) -> Self {
        let name = format!("{}∘σ", inner.name());
        Self { inner, sigma, name }
    }

    fn map(&self, q: &[f64]) -> Vec<f64> {
        q.iter().zip(&self.sigma).map(|(x, &s)| f64::from(s) * x).collect()
    }
}

impl Nonlinearity for Flipped {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn name(&self) -> &str {
        &self.name
    }

    fn value(&self, q: &[f64]) -> f64 {
        self.inner.value(&self.map(q))
    }

    fn gradient(&self, q: &[f64], out: &mut [f64]) {
        self.inner.gradient(&self.map(q), out);
        for (o, &s) in out.iter_mut().zip(&self.sigma) {
            *o *= f64::from(s);
        }
    }

    fn hessian(&self, q: &[f64], out: &mut [f64]) {
        let m = self.dim();
        self.inner.hessian(&self.map(q), out);
        for i in 0..m {
            for j in 0..m {
                out[i * m + j] *= f64::from(self.sigma[i] * self.sigma[j]);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd_grad(h: &dyn Nonlinearity, p: &[f64]) -> Vec<f64> {
        let mut q = p.to_vec();
        (0..p.len())
            .map(|i| {
                let s = 1e-6;
                q[i] = p[i] + s;
                let a = h.value(&q);
                q[i] = p[i] - s;
                let b = h.value(&q);
                q[i] = p[i];
                (a - b) / (2.0 * s)
            })
            .collect()
    }

    fn check(h: &dyn Nonlinearity, p: &[f64]) {
        let m = h.dim();
        let mut g = vec![0.0; m];
        h.gradient(p, &mut g);
        for (a, b) in g.iter().zip(fd_grad(h, p)) {
            assert!((a - b).abs() < 1e-7 * (1.0 + a.abs()), "{}: {a} vs {b}", h.name());
        }
        let mut hs = vec![0.0; m * m];
        let mut hf = vec![0.0; m * m];
        h.hessian(p, &mut hs);
        crate::nonlinearity::fd_hessian(h, p, &mut hf);
        for (a, b) in hs.iter().zip(&hf) {
            assert!((a - b).abs() < 1e-6 * (1.0 + a.abs()), "{}: {a} vs {b}", h.name());
        }
    }

    #[test]
    fn closed_forms_match_differences() {
        let p3 = [0.3, -0.7, 0.55];
        check(&AcQuadratic { m: 3 }, &p3);
        check(&AcLogSumExp { m: 3 }, &p3);
        check(&PairwiseSum { m: 3, coef: -1.5 }, &p3);
        check(&QuadraticForm::random_negative(3, 7), &p3);
        check(&QuadraticCoupling, &[1.3, 0.4]);
        let f = Flipped::new(Arc::new(AcLogSumExp { m: 3 }), vec![1, -1, 1]);
        check(&f, &p3);
    }

    #[test]
    fn ac_quadratic_pairs_are_unordered() {
        // (p₁−p₂)² counted once: H(1,0) = 1 + W(1) + W(0).
        let h = AcQuadratic { m: 2 };
        assert!((h.value(&[1.0, 0.0]) - 1.25).abs() < 1e-15);
    }

    #[test]
    fn logsumexp_dominates_sum_of_wells() {
        let h = AcLogSumExp { m: 4 };
        let p = [0.1, 0.5, -0.8, 0.95];
        let s: f64 = p.iter().map(|&x| double_well(x)).sum();
        assert!(s <= h.value(&p) + 1e-14);
        let q = [0.4, -0.4, 0.4, 0.4];
        let s: f64 = q.iter().map(|&x| double_well(x)).sum();
        assert!((s - h.value(&q)).abs() < 1e-14);
    }

    #[test]
    fn random_quadratic_is_reproducible_and_negative() {
        let a = QuadraticForm::random_negative(4, 11);
        let b = QuadraticForm::random_negative(4, 11);
        assert_eq!(a.a, b.a);
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    assert!(a.a[i * 4 + j] < -0.4);
                }
            }
        }
    }
}

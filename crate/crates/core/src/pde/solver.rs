//! Damped Newton for `u'' = ∇H(u)` with Dirichlet data on a uniform mesh.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{FieldBundle, Mesh1D};
use crate::nonlinearity::NonlinearitySpec;
use crate::{Error, Result, Tolerances};

pub const MAX_ITERATIONS: usize = 50;
pub const MAX_HALVINGS: usize = 30;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub iterations: usize,
    pub final_residual_norm: f64,
    pub converged: bool,
    /// Accepted step length per iteration.
    pub damping: Vec<f64>,
    /// Diagonal shift used for the step (0 for a plain Newton step).
    pub shifts: Vec<f64>,
    /// Residual max-norm before the first and after each iteration.
    pub residual_history: Vec<f64>,
    /// `r_{k+1}/r_k²` once `r_k < 1e−3`.
    pub quadratic_constants: Vec<f64>,
}

pub enum InitialGuess<'a> {
    Linear,
    Field(&'a FieldBundle),
}

/// Local problem data: `grad(u, out)` and row-major `hess(u, out)` at a node.
trait Local {
    fn m(&self) -> usize;
    fn grad(&self, u: &[f64], out: &mut [f64]) -> Result<()>;
    fn hess(&self, u: &[f64], out: &mut [f64]) -> Result<()>;
    /// Local potential whose gradient is `grad`, used as a merit function.
    fn potential(&self, u: &[f64]) -> Result<f64>;
}

struct SpecLocal<'a>(&'a NonlinearitySpec);

impl Local for SpecLocal<'_> {
    fn m(&self) -> usize {
        self.0.m()
    }
    fn grad(&self, u: &[f64], out: &mut [f64]) -> Result<()> {
        self.0.gradient_into(u, out)
    }
    fn hess(&self, u: &[f64], out: &mut [f64]) -> Result<()> {
        self.0.hessian_into(u, out)
    }
    fn potential(&self, u: &[f64]) -> Result<f64> {
        self.0.value(u)
    }
}

/// Right-hand side `f(u)` and `f'(u)` of a scalar problem `u'' = f(u)`.
pub trait ScalarForce: Sync {
    fn value(&self, u: f64) -> f64;
    fn derivative(&self, u: f64) -> f64;

    /// An antiderivative of `value`; defaults to composite Gauss–Legendre from 0.
    fn potential(&self, u: f64) -> f64 {
        const NODES: [f64; 3] = [-0.774_596_669_241_483_4, 0.0, 0.774_596_669_241_483_4];
        const WEIGHTS: [f64; 3] = [5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0];
        let panels = 64;
        let w = u / panels as f64;
        let mut s = 0.0;
        for p in 0..panels {
            let c = (p as f64 + 0.5) * w;
            for (x, a) in NODES.iter().zip(WEIGHTS) {
                s += a * self.value(c + 0.5 * w * x);
            }
        }
        0.5 * w * s
    }
}

/// Closure force with a central-difference derivative.
pub struct FnForce<F>(pub F);

impl<F: Fn(f64) -> f64 + Sync> ScalarForce for FnForce<F> {
    fn value(&self, u: f64) -> f64 {
        (self.0)(u)
    }
    fn derivative(&self, u: f64) -> f64 {
        let s = f64::EPSILON.cbrt() * u.abs().max(1.0);
        ((self.0)(u + s) - (self.0)(u - s)) / (2.0 * s)
    }
}

struct ScalarLocal<'a>(&'a dyn ScalarForce);

impl Local for ScalarLocal<'_> {
    fn m(&self) -> usize {
        1
    }
    fn grad(&self, u: &[f64], out: &mut [f64]) -> Result<()> {
        out[0] = self.0.value(u[0]);
        if out[0].is_finite() {
            Ok(())
        } else {
            Err(Error::Evaluation { what: "force", point: u.to_vec() })
        }
    }
    fn hess(&self, u: &[f64], out: &mut [f64]) -> Result<()> {
        out[0] = self.0.derivative(u[0]);
        if out[0].is_finite() {
            Ok(())
        } else {
            Err(Error::Evaluation { what: "force derivative", point: u.to_vec() })
        }
    }
    fn potential(&self, u: &[f64]) -> Result<f64> {
        let v = self.0.potential(u[0]);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Evaluation { what: "force potential", point: u.to_vec() })
        }
    }
}

/// Node-major state `u[k*m + i]`.
fn residual(local: &dyn Local, u: &[f64], n: usize, h: f64, out: &mut [f64]) -> Result<f64> {
    let m = local.m();
    let ih2 = 1.0 / (h * h);
    let mut g = vec![0.0; m];
    let mut norm: f64 = 0.0;
    for k in 1..n - 1 {
        local.grad(&u[k * m..(k + 1) * m], &mut g)?;
        for i in 0..m {
            let r = (u[(k + 1) * m + i] - 2.0 * u[k * m + i] + u[(k - 1) * m + i]) * ih2 - g[i];
            out[k * m + i] = r;
            norm = norm.max(r.abs());
        }
    }
    Ok(norm)
}

enum Factor {
    Lu(nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>),
    Cholesky(nalgebra::Cholesky<f64, nalgebra::Dyn>),
}

impl Factor {
    fn new(s: DMatrix<f64>, require_pd: bool) -> Option<Self> {
        if require_pd {
            s.cholesky().map(Factor::Cholesky)
        } else {
            let lu = s.lu();
            lu.is_invertible().then_some(Factor::Lu(lu))
        }
    }

    fn solve(&self, b: &DVector<f64>) -> Option<DVector<f64>> {
        match self {
            Factor::Lu(f) => f.solve(b),
            Factor::Cholesky(f) => Some(f.solve(b)),
        }
    }

    fn inverse(&self) -> Option<DMatrix<f64>> {
        match self {
            Factor::Lu(f) => f.try_inverse(),
            Factor::Cholesky(f) => Some(f.inverse()),
        }
    }
}

/// Solves `(K + μI) δ = r` where `K = −J` is the block-tridiagonal matrix with
/// diagonal blocks `2/h²·I + Hess H(u_k)` and off-diagonal blocks `−I/h²`, by
/// block Thomas elimination. With `require_pd` every Schur block must admit a
/// Cholesky factor (equivalently `K + μI` is positive definite); otherwise
/// `None` is returned.
fn block_solve(
    local: &dyn Local,
    u: &[f64],
    r: &[f64],
    n: usize,
    h: f64,
    mu: f64,
    require_pd: bool,
) -> Result<Option<Vec<f64>>> {
    let m = local.m();
    let ih2 = 1.0 / (h * h);
    let nin = n - 2;
    let mut hs = vec![0.0; m * m];
    let mut facs: Vec<Factor> = Vec::with_capacity(nin);
    let mut rhs: Vec<DVector<f64>> = Vec::with_capacity(nin);
    for (row, k) in (1..n - 1).enumerate() {
        local.hess(&u[k * m..(k + 1) * m], &mut hs)?;
        let mut s = DMatrix::from_row_slice(m, m, &hs);
        for i in 0..m {
            s[(i, i)] += 2.0 * ih2 + mu;
        }
        let mut d = DVector::from_row_slice(&r[k * m..(k + 1) * m]);
        if row > 0 {
            // S_k = D_k − S_{k−1}⁻¹/h⁴,  d'_k = d_k + S_{k−1}⁻¹ d'_{k−1}/h²
            let prev = &facs[row - 1];
            let Some(inv) = prev.inverse() else { return Ok(None) };
            s -= inv * (ih2 * ih2);
            let Some(y) = prev.solve(&rhs[row - 1]) else { return Ok(None) };
            d += y * ih2;
        }
        if require_pd {
            s = (&s + s.transpose()) * 0.5;
        }
        let Some(f) = Factor::new(s, require_pd) else { return Ok(None) };
        facs.push(f);
        rhs.push(d);
    }
    let mut delta = vec![0.0; n * m];
    let mut next: Option<DVector<f64>> = None;
    for row in (0..nin).rev() {
        let mut d = rhs[row].clone();
        if let Some(x) = &next {
            d += x * ih2;
        }
        let Some(x) = facs[row].solve(&d) else { return Ok(None) };
        delta[(row + 1) * m..(row + 2) * m].copy_from_slice(x.as_slice());
        next = Some(x);
    }
    Ok(Some(delta))
}

/// `Σ ½|u_{k+1} − u_k|²/h + h Σ_interior P(u_k)`; its gradient is `−h·r`.
fn energy(local: &dyn Local, u: &[f64], n: usize, h: f64) -> Result<f64> {
    let m = local.m();
    let mut e = 0.0;
    for k in 0..n - 1 {
        for i in 0..m {
            let d = u[(k + 1) * m + i] - u[k * m + i];
            e += 0.5 * d * d / h;
        }
    }
    for k in 1..n - 1 {
        e += h * local.potential(&u[k * m..(k + 1) * m])?;
    }
    Ok(e)
}

/// Largest diagonal shift tried before giving up on a descent direction.
const MAX_SHIFT: f64 = 1e12;

fn newton(local: &dyn Local, mut u: Vec<f64>, n: usize, h: f64, tol: &Tolerances) -> Result<(Vec<f64>, SolveReport)> {
    let len = u.len();
    let mut r = vec![0.0; len];
    let mut trial_r = vec![0.0; len];
    let mut norm = residual(local, &u, n, h, &mut r)?;
    let mut rep = SolveReport {
        iterations: 0,
        final_residual_norm: norm,
        converged: norm <= tol.newton,
        damping: vec![],
        shifts: vec![],
        residual_history: vec![norm],
        quadratic_constants: vec![],
    };
    let axpy = |u: &[f64], d: &[f64], l: f64| -> Vec<f64> { u.iter().zip(d).map(|(a, b)| a + l * b).collect() };
    while !rep.converged && rep.iterations < MAX_ITERATIONS {
        rep.iterations += 1;
        let mut accepted: Option<(Vec<f64>, f64, f64, f64)> = None;
        // Full Newton step first.
        if let Some(delta) = block_solve(local, &u, &r, n, h, 0.0, false)? {
            let trial = axpy(&u, &delta, 1.0);
            if let Ok(tn) = residual(local, &trial, n, h, &mut trial_r) {
                if tn < norm {
                    accepted = Some((trial, tn, 1.0, 0.0));
                }
            }
        }
        // Otherwise a descent direction for the discrete energy, shifted until
        // positive definite, with halving; a step is taken once either the
        // residual or the energy decreases.
        if accepted.is_none() {
            let e0 = energy(local, &u, n, h)?;
            let mut mu = 0.0;
            let delta = loop {
                if let Some(d) = block_solve(local, &u, &r, n, h, mu, true)? {
                    break Some(d);
                }
                mu = if mu == 0.0 { 1e-3 } else { 2.0 * mu };
                if mu > MAX_SHIFT {
                    break None;
                }
            };
            if let Some(delta) = delta {
                let mut lambda = 1.0;
                for _ in 0..=MAX_HALVINGS {
                    let trial = axpy(&u, &delta, lambda);
                    if let Ok(tn) = residual(local, &trial, n, h, &mut trial_r) {
                        let lower_energy = energy(local, &trial, n, h).map(|e| e < e0).unwrap_or(false);
                        if tn < norm || lower_energy {
                            accepted = Some((trial, tn, lambda, mu));
                            break;
                        }
                    }
                    lambda *= 0.5;
                }
            }
        }
        let Some((trial, tn, lambda, mu)) = accepted else { break };
        if norm < 1e-3 && tn > 0.0 && tn < norm {
            rep.quadratic_constants.push(tn / (norm * norm));
        }
        u = trial;
        std::mem::swap(&mut r, &mut trial_r);
        norm = tn;
        rep.damping.push(lambda);
        rep.shifts.push(mu);
        rep.residual_history.push(norm);
        rep.final_residual_norm = norm;
        rep.converged = norm <= tol.newton;
    }
    Ok((u, rep))
}

/// Damped Newton on `(u_{k+1} − 2u_k + u_{k−1})/h² = ∇H(u_k)` at interior nodes.
///
/// Non-convergence is reported through `SolveReport::converged`, not as an error.
pub fn solve_system_bvp(
    spec: &NonlinearitySpec,
    mesh: Mesh1D,
    boundary: &[(f64, f64)],
    guess: InitialGuess<'_>,
    tol: &Tolerances,
) -> Result<(FieldBundle, SolveReport)> {
    let m = spec.m();
    if boundary.len() != m {
        return Err(Error::DimensionMismatch { expected: m, got: boundary.len() });
    }
    for (i, &(a, b)) in boundary.iter().enumerate() {
        let (lo, hi) = (spec.domain.lo[i], spec.domain.hi[i]);
        if !(lo <= a && a <= hi && lo <= b && b <= hi) {
            return Err(Error::invalid(format!(
                "boundary data ({a}, {b}) of component {} lies outside [{lo}, {hi}]",
                i + 1
            )));
        }
    }
    let init = match guess {
        InitialGuess::Linear => FieldBundle::linear(mesh, boundary)?,
        InitialGuess::Field(f) => {
            if f.mesh != mesh || f.m() != m || f.boundary != boundary {
                return Err(Error::invalid("initial guess does not match mesh or boundary data"));
            }
            f.clone()
        }
    };
    let n = mesh.n;
    let mut u = vec![0.0; n * m];
    for k in 0..n {
        for i in 0..m {
            u[k * m + i] = init.components[i][k];
        }
    }
    let (u, rep) = newton(&SpecLocal(spec), u, n, mesh.h(), tol)?;
    let comps = (0..m).map(|i| (0..n).map(|k| u[k * m + i]).collect()).collect();
    Ok((FieldBundle::new(mesh, comps, boundary.to_vec())?, rep))
}

/// Scalar specialization `u'' = f(u)`; `guess` defaults to the linear interpolant.
pub fn solve_scalar_bvp(
    force: &dyn ScalarForce,
    mesh: Mesh1D,
    boundary: (f64, f64),
    guess: Option<&[f64]>,
    tol: &Tolerances,
) -> Result<(Vec<f64>, SolveReport)> {
    let u = match guess {
        Some(g) => {
            if g.len() != mesh.n || g[0] != boundary.0 || g[mesh.n - 1] != boundary.1 {
                return Err(Error::invalid("initial guess does not match mesh or boundary data"));
            }
            g.to_vec()
        }
        None => FieldBundle::linear(mesh, &[boundary])?.components.remove(0),
    };
    newton(&ScalarLocal(force), u, mesh.n, mesh.h(), tol)
}

/// Per-component interior residuals `u'' − ∂ᵢH(u)`; boundary entries are zero.
pub fn system_residual(spec: &NonlinearitySpec, field: &FieldBundle) -> Result<Vec<Vec<f64>>> {
    let (m, n) = (field.m(), field.n());
    if spec.m() != m {
        return Err(Error::DimensionMismatch { expected: spec.m(), got: m });
    }
    let mut u = vec![0.0; n * m];
    for k in 0..n {
        for i in 0..m {
            u[k * m + i] = field.components[i][k];
        }
    }
    let mut r = vec![0.0; n * m];
    residual(&SpecLocal(spec), &u, n, field.mesh.h(), &mut r)?;
    Ok((0..m).map(|i| (0..n).map(|k| r[k * m + i]).collect()).collect())
}

pub fn max_norm(rows: &[Vec<f64>]) -> f64 {
    rows.iter().flatten().fold(0.0f64, |a, x| a.max(x.abs()))
}

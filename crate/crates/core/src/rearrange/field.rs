use serde::{Deserialize, Serialize};

use crate::nonlinearity::{linspace, tensor_product};
use crate::pde::{component_monotonicity, FieldBundle, Monotonicity};
use crate::{Error, Result, Tolerances};

/// Boundary slices `uᵢ(·, 0)` and `uᵢ(·, 1)` must be constant to this absolute tolerance.
pub const BOUNDARY_TOL: f64 = 1e-12;

/// Relative tolerance for uniform spacing of CSV coordinates.
const SPACING_TOL: f64 = 1e-9;

/// Nodal values on a uniform grid over `Ω × [0,1]` with `Ω` a box in one or
/// two dimensions.
///
/// `components[i][b * nv + j]` is `uᵢ` at base node `b` (lexicographic over
/// the base axes, last axis fastest) and vertical node `j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxField {
    pub base_axes: Vec<Vec<f64>>,
    pub vertical: Vec<f64>,
    pub components: Vec<Vec<f64>>,
}

fn check_uniform(axis: &[f64], what: &str) -> Result<()> {
    if axis.len() < 2 || axis.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid(format!("{what} axis needs at least two finite nodes")));
    }
    let h = (axis[axis.len() - 1] - axis[0]) / (axis.len() - 1) as f64;
    if !(h > 0.0) {
        return Err(Error::invalid(format!("{what} axis must be increasing")));
    }
    for (k, w) in axis.windows(2).enumerate() {
        if ((w[1] - w[0]) - h).abs() > SPACING_TOL * h.max(1.0) {
            return Err(Error::invalid(format!("{what} axis is not uniform at node {k}")));
        }
    }
    Ok(())
}

impl BoxField {
    pub fn new(base_axes: Vec<Vec<f64>>, vertical: Vec<f64>, components: Vec<Vec<f64>>) -> Result<Self> {
        if !(1..=2).contains(&base_axes.len()) {
            return Err(Error::invalid("base domain must have one or two axes"));
        }
        for a in &base_axes {
            check_uniform(a, "base")?;
        }
        check_uniform(&vertical, "vertical")?;
        if vertical[0] != 0.0 || vertical[vertical.len() - 1] != 1.0 {
            return Err(Error::invalid("vertical axis must run from 0 to 1"));
        }
        if components.is_empty() {
            return Err(Error::invalid("field needs at least one component"));
        }
        let len = base_axes.iter().map(Vec::len).product::<usize>() * vertical.len();
        for (i, c) in components.iter().enumerate() {
            if c.len() != len {
                return Err(Error::DimensionMismatch { expected: len, got: c.len() });
            }
            if c.iter().any(|x| !x.is_finite()) {
                return Err(Error::invalid(format!("component {} has non-finite values", i + 1)));
            }
        }
        let f = Self { base_axes, vertical, components };
        for i in 0..f.m() {
            let (a, b) = (f.value(i, 0, 0), f.value(i, 0, f.nv() - 1));
            for base in 0..f.base_count() {
                if (f.value(i, base, 0) - a).abs() > BOUNDARY_TOL
                    || (f.value(i, base, f.nv() - 1) - b).abs() > BOUNDARY_TOL
                {
                    return Err(Error::invalid(format!(
                        "boundary slice of component {} is not constant (base node {base})",
                        i + 1
                    )));
                }
            }
        }
        Ok(f)
    }

    /// The profile repeated over every base node.
    pub fn lift(base_axes: Vec<Vec<f64>>, profile: &FieldBundle) -> Result<Self> {
        let vertical = profile.mesh.nodes();
        let nb: usize = base_axes.iter().map(Vec::len).product();
        let components = profile.components.iter().map(|c| c.repeat(nb)).collect();
        Self::new(base_axes, vertical, components)
    }

    /// Samples `f(i, x′, x_N)`.
    pub fn from_fn(
        base_axes: Vec<Vec<f64>>,
        vertical: Vec<f64>,
        m: usize,
        f: impl Fn(usize, &[f64], f64) -> f64,
    ) -> Result<Self> {
        let base = tensor_product(&base_axes);
        let components = (0..m)
            .map(|i| base.iter().flat_map(|xb| vertical.iter().map(|&t| f(i, xb, t)).collect::<Vec<_>>()).collect())
            .collect();
        Self::new(base_axes, vertical, components)
    }

    pub fn m(&self) -> usize {
        self.components.len()
    }

    pub fn nv(&self) -> usize {
        self.vertical.len()
    }

    pub fn base_count(&self) -> usize {
        self.base_axes.iter().map(Vec::len).product()
    }

    pub fn base_dim(&self) -> usize {
        self.base_axes.len()
    }

    pub fn value(&self, i: usize, base: usize, j: usize) -> f64 {
        self.components[i][base * self.nv() + j]
    }

    /// Vertical line of component `i` at base node `base`.
    pub fn line(&self, i: usize, base: usize) -> &[f64] {
        let nv = self.nv();
        &self.components[i][base * nv..(base + 1) * nv]
    }

    /// `(aᵢ, bᵢ)` per component.
    pub fn boundary(&self) -> Vec<(f64, f64)> {
        (0..self.m()).map(|i| (self.value(i, 0, 0), self.value(i, 0, self.nv() - 1))).collect()
    }

    /// `|Ω|`.
    pub fn base_volume(&self) -> f64 {
        self.base_axes.iter().map(|a| a[a.len() - 1] - a[0]).product()
    }

    pub fn steps(&self) -> (Vec<f64>, f64) {
        let h = |a: &[f64]| (a[a.len() - 1] - a[0]) / (a.len() - 1) as f64;
        (self.base_axes.iter().map(|a| h(a)).collect(), h(&self.vertical))
    }

    /// Normalized trapezoid weights of the base nodes (lexicographic).
    pub fn base_weights(&self) -> Vec<f64> {
        let per: Vec<Vec<f64>> = self.base_axes.iter().map(|a| trapezoid_weights(a.len())).collect();
        let mut w = vec![1.0];
        for p in &per {
            w = w.iter().flat_map(|a| p.iter().map(move |b| a * b)).collect();
        }
        w
    }

    /// Whether every component is constant in `x′` at every vertical node.
    pub fn is_one_dimensional(&self, tol: f64) -> bool {
        (0..self.m()).all(|i| {
            (1..self.base_count())
                .all(|b| self.line(i, b).iter().zip(self.line(i, 0)).all(|(x, y)| (x - y).abs() <= tol))
        })
    }

    /// Direction of each component, consistent over all vertical lines.
    pub fn directions(&self, tol: &Tolerances) -> Result<Vec<i8>> {
        (0..self.m())
            .map(|i| {
                let mut dir: Option<i8> = None;
                for b in 0..self.base_count() {
                    match component_monotonicity(self.line(i, b), tol.mono) {
                        Monotonicity::NonMonotone { node } => {
                            return Err(Error::NotMonotone { component: i + 1, node: b * self.nv() + node })
                        }
                        v => {
                            let d = v.direction();
                            if dir.is_some() && dir != d {
                                return Err(Error::NotMonotone { component: i + 1, node: b * self.nv() });
                            }
                            dir = d;
                        }
                    }
                }
                Ok(dir.unwrap_or(1))
            })
            .collect()
    }

    /// Header `x1[,x2],xN,u1..um`; rows lexicographic with `xN` fastest.
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let mut head: Vec<String> = (1..=self.base_dim()).map(|d| format!("x{d}")).collect();
        head.push("xN".into());
        head.extend((1..=self.m()).map(|i| format!("u{i}")));
        wr.write_record(&head)?;
        for (b, xb) in tensor_product(&self.base_axes).iter().enumerate() {
            for (j, &t) in self.vertical.iter().enumerate() {
                let mut row: Vec<String> = xb.iter().map(|x| format!("{x:.17e}")).collect();
                row.push(format!("{t:.17e}"));
                row.extend((0..self.m()).map(|i| format!("{:.17e}", self.value(i, b, j))));
                wr.write_record(&row)?;
            }
        }
        wr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: std::io::Read>(r: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        let head: Vec<String> = rd.headers()?.iter().map(|s| s.trim().to_string()).collect();
        let xn =
            head.iter().position(|h| h == "xN").ok_or_else(|| Error::invalid("box-field CSV needs an xN column"))?;
        if !(1..=2).contains(&xn) || head[..xn].iter().enumerate().any(|(d, h)| *h != format!("x{}", d + 1)) {
            return Err(Error::invalid("box-field CSV header must be x1[,x2],xN,u1,...,um"));
        }
        let m = head.len() - xn - 1;
        if m == 0 || head[xn + 1..].iter().enumerate().any(|(i, h)| *h != format!("u{}", i + 1)) {
            return Err(Error::invalid("box-field CSV header must be x1[,x2],xN,u1,...,um"));
        }
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for rec in rd.records() {
            let rec = rec?;
            if rec.len() != head.len() {
                return Err(Error::invalid(format!("box-field CSV row {} has {} fields", rows.len() + 1, rec.len())));
            }
            let row = rec
                .iter()
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::invalid(format!("box-field CSV row {}: {e}", rows.len() + 1)))?;
            rows.push(row);
        }
        // Axis values are read off in order of first appearance.
        let mut axes: Vec<Vec<f64>> = vec![Vec::new(); xn + 1];
        for (d, axis) in axes.iter_mut().enumerate() {
            for r in &rows {
                if !axis.contains(&r[d]) {
                    axis.push(r[d]);
                }
            }
        }
        let expected: usize = axes.iter().map(Vec::len).product();
        if expected != rows.len() {
            return Err(Error::invalid("box-field CSV is not a complete tensor grid"));
        }
        for (k, r) in rows.iter().enumerate() {
            let mut rem = k;
            for d in (0..=xn).rev() {
                let n = axes[d].len();
                if r[d] != axes[d][rem % n] {
                    return Err(Error::invalid(format!("box-field CSV row {} is out of lexicographic order", k + 1)));
                }
                rem /= n;
            }
        }
        let vertical = axes.pop().unwrap_or_default();
        let components = (0..m).map(|i| rows.iter().map(|r| r[xn + 1 + i]).collect()).collect();
        Self::new(axes, vertical, components)
    }
}

/// Normalized trapezoid weights on `n ≥ 2` equispaced nodes.
pub fn trapezoid_weights(n: usize) -> Vec<f64> {
    let h = 1.0 / (n - 1) as f64;
    (0..n).map(|k| if k == 0 || k + 1 == n { 0.5 * h } else { h }).collect()
}

/// `n` equispaced vertical nodes on `[0,1]`.
pub(crate) fn unit_axis(n: usize) -> Vec<f64> {
    linspace(0.0, 1.0, n)
}

use serde::{Deserialize, Serialize};

use super::Mesh1D;
use crate::{Error, Result};

/// `m` nodal arrays on a 1D mesh with Dirichlet pairs equal to the end values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldBundle {
    pub mesh: Mesh1D,
    pub components: Vec<Vec<f64>>,
    pub boundary: Vec<(f64, f64)>,
}

impl FieldBundle {
    pub fn new(mesh: Mesh1D, components: Vec<Vec<f64>>, boundary: Vec<(f64, f64)>) -> Result<Self> {
        if components.is_empty() || components.len() != boundary.len() {
            return Err(Error::invalid("field needs one boundary pair per component"));
        }
        for (i, (c, b)) in components.iter().zip(&boundary).enumerate() {
            if c.len() != mesh.n {
                return Err(Error::DimensionMismatch { expected: mesh.n, got: c.len() });
            }
            if c.iter().any(|x| !x.is_finite()) {
                return Err(Error::invalid(format!("component {} has non-finite values", i + 1)));
            }
            if c[0] != b.0 || c[mesh.n - 1] != b.1 {
                return Err(Error::invalid(format!("component {} does not match its boundary data", i + 1)));
            }
        }
        Ok(Self { mesh, components, boundary })
    }

    /// Boundary pairs are read off the end nodes.
    pub fn from_components(mesh: Mesh1D, components: Vec<Vec<f64>>) -> Result<Self> {
        let boundary = components
            .iter()
            .map(|c| (c.first().copied().unwrap_or(f64::NAN), c.last().copied().unwrap_or(f64::NAN)))
            .collect();
        Self::new(mesh, components, boundary)
    }

    /// Samples `fᵢ(x)` at the nodes.
    pub fn from_fn(mesh: Mesh1D, fs: &[&dyn Fn(f64) -> f64]) -> Result<Self> {
        let x = mesh.nodes();
        Self::from_components(mesh, fs.iter().map(|f| x.iter().map(|&t| f(t)).collect()).collect())
    }

    /// Per-component linear interpolation of the boundary data.
    pub fn linear(mesh: Mesh1D, boundary: &[(f64, f64)]) -> Result<Self> {
        let n = mesh.n;
        let comps = boundary
            .iter()
            .map(|&(a, b)| {
                (0..n)
                    .map(|k| match k {
                        0 => a,
                        k if k + 1 == n => b,
                        k => a + (b - a) * k as f64 / (n - 1) as f64,
                    })
                    .collect()
            })
            .collect();
        Self::new(mesh, comps, boundary.to_vec())
    }

    pub fn m(&self) -> usize {
        self.components.len()
    }

    pub fn n(&self) -> usize {
        self.mesh.n
    }

    pub fn point(&self, k: usize) -> Vec<f64> {
        self.components.iter().map(|c| c[k]).collect()
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        (0..self.n()).map(|k| self.point(k)).collect()
    }

    /// Coordinatewise `[min, max]` of the nodal values.
    pub fn ranges(&self) -> Vec<(f64, f64)> {
        self.components
            .iter()
            .map(|c| c.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x))))
            .collect()
    }

    /// Selects and reorders components.
    pub fn select(&self, order: &[usize]) -> Result<Self> {
        let comps = order.iter().map(|&i| self.components[i].clone()).collect();
        let bnd = order.iter().map(|&i| self.boundary[i]).collect();
        Self::new(self.mesh, comps, bnd)
    }

    /// CSV with header `x,u1,...,um`, 17 significant digits.
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let mut head = vec!["x".to_string()];
        head.extend((1..=self.m()).map(|i| format!("u{i}")));
        wr.write_record(&head)?;
        for k in 0..self.n() {
            let mut row = vec![format!("{:.16e}", self.mesh.node(k))];
            row.extend(self.components.iter().map(|c| format!("{:.16e}", c[k])));
            wr.write_record(&row)?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: std::io::Read>(r: R) -> Result<Self> {
        let mut rd = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
        let head = rd.headers()?.clone();
        if head.len() < 2 || &head[0] != "x" {
            return Err(Error::invalid("field CSV needs header `x,u1,...`"));
        }
        let m = head.len() - 1;
        let mut xs = Vec::new();
        let mut comps = vec![Vec::new(); m];
        for rec in rd.records() {
            let rec = rec?;
            if rec.len() != m + 1 {
                return Err(Error::invalid("ragged field CSV row"));
            }
            let vals: Vec<f64> = rec
                .iter()
                .map(|s| s.parse::<f64>().map_err(|e| Error::invalid(format!("bad number `{s}`: {e}"))))
                .collect::<Result<_>>()?;
            xs.push(vals[0]);
            for i in 0..m {
                comps[i].push(vals[i + 1]);
            }
        }
        if xs.len() < 3 {
            return Err(Error::invalid("field CSV needs at least 3 rows"));
        }
        let mesh = Mesh1D::new(xs[0], *xs.last().unwrap(), xs.len())?;
        for (k, &x) in xs.iter().enumerate() {
            if (x - mesh.node(k)).abs() > 1e-9 * (mesh.x_hi - mesh.x_lo) {
                return Err(Error::invalid(format!("field CSV mesh is not uniform at row {}", k + 1)));
            }
        }
        Self::from_components(mesh, comps)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boundary_must_match() {
        let mesh = Mesh1D::new(0.0, 1.0, 3).unwrap();
        assert!(FieldBundle::new(mesh, vec![vec![0.0, 0.5, 1.0]], vec![(0.0, 0.9)]).is_err());
        assert!(FieldBundle::new(mesh, vec![vec![0.0, 0.5]], vec![(0.0, 0.5)]).is_err());
    }

    #[test]
    fn csv_roundtrip_is_exact() {
        let mesh = Mesh1D::symmetric(3.0, 7).unwrap();
        let f = FieldBundle::from_fn(mesh, &[&|x: f64| (x / 2f64.sqrt()).tanh(), &|x: f64| x.sin() / 3.0]).unwrap();
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("x,u1,u2\n"));
        let g = FieldBundle::read_csv(buf.as_slice()).unwrap();
        assert_eq!(f, g);
    }

    #[test]
    fn linear_guess_hits_boundary() {
        let mesh = Mesh1D::new(0.0, 1.0, 11).unwrap();
        let f = FieldBundle::linear(mesh, &[(1.0, -1.0), (0.1, 0.3)]).unwrap();
        assert_eq!(f.components[0][10], -1.0);
        assert!((f.components[1][5] - 0.2).abs() < 1e-15);
    }
}

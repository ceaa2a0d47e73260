use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Uniform mesh of `n ≥ 3` nodes on `[x_lo, x_hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mesh1D {
    pub x_lo: f64,
    pub x_hi: f64,
    pub n: usize,
}

impl Mesh1D {
    pub fn new(x_lo: f64, x_hi: f64, n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::invalid(format!("mesh needs n >= 3 nodes, got {n}")));
        }
        if !(x_lo.is_finite() && x_hi.is_finite() && x_lo < x_hi) {
            return Err(Error::invalid(format!("mesh interval [{x_lo}, {x_hi}] is empty")));
        }
        Ok(Self { x_lo, x_hi, n })
    }

    /// `[−L, L]` with `n` nodes.
    pub fn symmetric(l: f64, n: usize) -> Result<Self> {
        Self::new(-l, l, n)
    }

    pub fn h(&self) -> f64 {
        (self.x_hi - self.x_lo) / (self.n - 1) as f64
    }

    pub fn node(&self, k: usize) -> f64 {
        if k + 1 == self.n {
            self.x_hi
        } else {
            self.x_lo + self.h() * k as f64
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|k| self.node(k)).collect()
    }

    pub fn midpoint_index(&self) -> usize {
        (self.n - 1) / 2
    }

    /// Mesh with spacing halved.
    pub fn refined(&self) -> Self {
        Self { n: 2 * self.n - 1, ..*self }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spacing_and_nodes() {
        let m = Mesh1D::symmetric(10.0, 401).unwrap();
        assert!((m.h() - 0.05).abs() < 1e-15);
        assert_eq!(m.node(0), -10.0);
        assert_eq!(m.node(400), 10.0);
        assert_eq!(m.node(200), 0.0);
        assert_eq!(m.midpoint_index(), 200);
        assert_eq!(m.refined().n, 801);
        assert!(Mesh1D::new(0.0, 1.0, 2).is_err());
        assert!(Mesh1D::new(1.0, 1.0, 5).is_err());
    }
}

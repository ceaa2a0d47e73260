use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Tabulated `(p, V(p), V'(p))` with strictly increasing `p`.
///
/// Between entries `V` is the cubic Hermite interpolant of the values and
/// slopes; outside the table it continues linearly with the end slope.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialCurve {
    pub p: Vec<f64>,
    pub v: Vec<f64>,
    pub vprime: Vec<f64>,
}

impl PotentialCurve {
    pub fn new(p: Vec<f64>, v: Vec<f64>, vprime: Vec<f64>) -> Result<Self> {
        if p.len() < 2 || p.len() != v.len() || p.len() != vprime.len() {
            return Err(Error::invalid("potential table needs at least two equally long columns"));
        }
        if p.iter().chain(&v).chain(&vprime).any(|x| !x.is_finite()) {
            return Err(Error::invalid("potential table has non-finite entries"));
        }
        if p.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("potential grid must be strictly increasing"));
        }
        Ok(Self { p, v, vprime })
    }

    /// Sorts nodal rows by `p`; repeated `p` values (flat ends) keep the first row.
    pub fn from_nodes(mut rows: Vec<(f64, f64, f64)>) -> Result<Self> {
        rows.sort_by(|a, b| a.0.total_cmp(&b.0));
        rows.dedup_by(|b, a| a.0 == b.0);
        let (mut p, mut v, mut d) = (Vec::new(), Vec::new(), Vec::new());
        for (x, y, z) in rows {
            p.push(x);
            v.push(y);
            d.push(z);
        }
        Self::new(p, v, d)
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    pub fn range(&self) -> (f64, f64) {
        (self.p[0], self.p[self.p.len() - 1])
    }

    /// Minimum over the table entries.
    pub fn min_value(&self) -> f64 {
        self.v.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Interval index `j` with `p[j] ≤ x ≤ p[j+1]`, or `None` outside the table.
    fn locate(&self, x: f64) -> Option<usize> {
        let n = self.p.len();
        if x < self.p[0] || x > self.p[n - 1] {
            return None;
        }
        Some(self.p.partition_point(|&q| q <= x).clamp(1, n - 1) - 1)
    }

    fn exact(&self, x: f64) -> Option<usize> {
        self.p.binary_search_by(|q| q.total_cmp(&x)).ok()
    }

    pub fn eval(&self, x: f64) -> f64 {
        if let Some(k) = self.exact(x) {
            return self.v[k];
        }
        let n = self.p.len();
        match self.locate(x) {
            None if x < self.p[0] => self.v[0] + self.vprime[0] * (x - self.p[0]),
            None => self.v[n - 1] + self.vprime[n - 1] * (x - self.p[n - 1]),
            Some(j) => {
                let (d, t) = self.unit(j, x);
                let (t2, t3) = (t * t, t * t * t);
                (2.0 * t3 - 3.0 * t2 + 1.0) * self.v[j]
                    + (t3 - 2.0 * t2 + t) * d * self.vprime[j]
                    + (-2.0 * t3 + 3.0 * t2) * self.v[j + 1]
                    + (t3 - t2) * d * self.vprime[j + 1]
            }
        }
    }

    /// Derivative of [`eval`](Self::eval); equals the tabulated slope at entries.
    pub fn eval_prime(&self, x: f64) -> f64 {
        if let Some(k) = self.exact(x) {
            return self.vprime[k];
        }
        let n = self.p.len();
        match self.locate(x) {
            None if x < self.p[0] => self.vprime[0],
            None => self.vprime[n - 1],
            Some(j) => {
                let (d, t) = self.unit(j, x);
                let t2 = t * t;
                ((6.0 * t2 - 6.0 * t) * (self.v[j] - self.v[j + 1])) / d
                    + (3.0 * t2 - 4.0 * t + 1.0) * self.vprime[j]
                    + (3.0 * t2 - 2.0 * t) * self.vprime[j + 1]
            }
        }
    }

    pub fn eval_second(&self, x: f64) -> f64 {
        match self.locate(x) {
            None => 0.0,
            Some(j) => {
                let (d, t) = self.unit(j, x);
                ((12.0 * t - 6.0) * (self.v[j] - self.v[j + 1])) / (d * d)
                    + ((6.0 * t - 4.0) * self.vprime[j] + (6.0 * t - 2.0) * self.vprime[j + 1]) / d
            }
        }
    }

    fn unit(&self, j: usize, x: f64) -> (f64, f64) {
        let d = self.p[j + 1] - self.p[j];
        (d, (x - self.p[j]) / d)
    }

    /// Columns `p,V,Vprime`.
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["p", "V", "Vprime"])?;
        for k in 0..self.p.len() {
            wr.write_record([
                format!("{:.17e}", self.p[k]),
                format!("{:.17e}", self.v[k]),
                format!("{:.17e}", self.vprime[k]),
            ])?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: std::io::Read>(r: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        let head = rd.headers()?.clone();
        if head.iter().collect::<Vec<_>>() != ["p", "V", "Vprime"] {
            return Err(Error::invalid("potential CSV header must be p,V,Vprime"));
        }
        let (mut p, mut v, mut d) = (Vec::new(), Vec::new(), Vec::new());
        for rec in rd.records() {
            let rec = rec?;
            let parse = |i: usize| -> Result<f64> {
                rec.get(i)
                    .and_then(|s| s.trim().parse().ok())
                    .ok_or_else(|| Error::invalid(format!("bad number in potential CSV row {rec:?}")))
            };
            p.push(parse(0)?);
            v.push(parse(1)?);
            d.push(parse(2)?);
        }
        Self::new(p, v, d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cubic() -> PotentialCurve {
        // V = p³ − p sampled with exact slopes: Hermite reproduces it exactly.
        let p: Vec<f64> = (0..7).map(|k| -1.5 + 0.5 * k as f64).collect();
        let v = p.iter().map(|x| x * x * x - x).collect();
        let d = p.iter().map(|x| 3.0 * x * x - 1.0).collect();
        PotentialCurve::new(p, v, d).unwrap()
    }

    #[test]
    fn hermite_reproduces_cubics() {
        let c = cubic();
        for k in 0..=60 {
            let x = -1.5 + 3.0 * k as f64 / 60.0;
            assert!((c.eval(x) - (x * x * x - x)).abs() < 1e-13);
            assert!((c.eval_prime(x) - (3.0 * x * x - 1.0)).abs() < 1e-12);
            assert!((c.eval_second(x) - 6.0 * x).abs() < 1e-11);
        }
    }

    #[test]
    fn linear_continuation_outside() {
        let c = cubic();
        assert_eq!(c.eval(-2.0), c.v[0] - 0.5 * c.vprime[0]);
        assert_eq!(c.eval_prime(3.0), c.vprime[6]);
        assert_eq!(c.eval_second(3.0), 0.0);
    }

    #[test]
    fn duplicates_keep_first_row() {
        let c = PotentialCurve::from_nodes(vec![(1.0, 2.0, 3.0), (0.0, 0.0, 0.0), (1.0, 9.0, 9.0)]).unwrap();
        assert_eq!(c.p, vec![0.0, 1.0]);
        assert_eq!(c.v, vec![0.0, 2.0]);
        assert!(PotentialCurve::from_nodes(vec![(1.0, 0.0, 0.0), (1.0, 0.0, 0.0)]).is_err());
    }

    #[test]
    fn csv_roundtrip() {
        let c = cubic();
        let mut buf = Vec::new();
        c.write_csv(&mut buf).unwrap();
        assert_eq!(PotentialCurve::read_csv(buf.as_slice()).unwrap(), c);
    }
}

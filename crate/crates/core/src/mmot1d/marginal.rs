use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Atoms closer than this (relative to `max(1,|x|)`) are merged.
pub const MERGE_TOL: f64 = 1e-14;

/// Finitely supported probability measure on ℝ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMarginal")]
pub struct DiscreteMarginal {
    atoms: Vec<f64>,
    weights: Vec<f64>,
}

#[derive(Deserialize)]
struct RawMarginal {
    atoms: Vec<f64>,
    weights: Vec<f64>,
}

impl TryFrom<RawMarginal> for DiscreteMarginal {
    type Error = Error;
    fn try_from(r: RawMarginal) -> Result<Self> {
        Self::new(r.atoms, r.weights)
    }
}

impl DiscreteMarginal {
    /// Atoms strictly increasing, weights positive with sum within 1e−12 of 1.
    pub fn new(atoms: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if atoms.is_empty() || atoms.len() != weights.len() {
            return Err(Error::invalid("marginal needs equally many atoms and weights, at least one"));
        }
        if atoms.iter().any(|a| !a.is_finite()) || atoms.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("marginal atoms must be finite and strictly increasing"));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::invalid("marginal weights must be positive"));
        }
        let s: f64 = weights.iter().sum();
        if (s - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!("marginal weights sum to {s}, not 1")));
        }
        Ok(Self { atoms, weights })
    }

    pub fn uniform(atoms: Vec<f64>) -> Result<Self> {
        let n = atoms.len();
        Self::new(atoms, vec![1.0 / n as f64; n])
    }

    /// Sorts, merges near-duplicates by summing weights and normalizes.
    pub fn from_values(values: &[f64], weights: Option<&[f64]>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("cannot build a marginal from no values"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("values must be finite"));
        }
        let w: Vec<f64> = match weights {
            Some(w) if w.len() != values.len() => {
                return Err(Error::DimensionMismatch { expected: values.len(), got: w.len() })
            }
            Some(w) if w.iter().any(|x| !(x.is_finite() && *x > 0.0)) => {
                return Err(Error::invalid("weights must be positive"))
            }
            Some(w) => w.to_vec(),
            None => vec![1.0; values.len()],
        };
        let mut idx: Vec<usize> = (0..values.len()).collect();
        idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        let mut atoms: Vec<f64> = Vec::with_capacity(values.len());
        let mut mass: Vec<f64> = Vec::with_capacity(values.len());
        for k in idx {
            let v = values[k];
            match atoms.last() {
                Some(&last) if v - last <= MERGE_TOL * last.abs().max(1.0) => {
                    *mass.last_mut().unwrap() += w[k];
                }
                _ => {
                    atoms.push(v);
                    mass.push(w[k]);
                }
            }
        }
        let total: f64 = mass.iter().sum();
        mass.iter_mut().for_each(|x| *x /= total);
        Self::new(atoms, mass)
    }

    pub fn atoms(&self) -> &[f64] {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.atoms[0]
    }

    pub fn max(&self) -> f64 {
        *self.atoms.last().unwrap()
    }

    /// Running sums of the weights; the last entry is forced to exactly 1.
    pub fn cumulative(&self) -> Vec<f64> {
        let mut acc = 0.0;
        let mut out: Vec<f64> = self
            .weights
            .iter()
            .map(|w| {
                acc += w;
                acc
            })
            .collect();
        *out.last_mut().unwrap() = 1.0;
        out
    }

    /// Left-continuous generalized inverse `inf{x : F(x) ≥ t}`.
    pub fn quantile(&self, t: f64) -> f64 {
        let cum = self.cumulative();
        let k = cum.partition_point(|&c| c < t);
        self.atoms[k.min(self.len() - 1)]
    }

    /// Law of `s·X` for `s = ±1`.
    pub fn flipped(&self, s: i8) -> Self {
        if s >= 0 {
            return self.clone();
        }
        Self {
            atoms: self.atoms.iter().rev().map(|a| -a).collect(),
            weights: self.weights.iter().rev().copied().collect(),
        }
    }

    /// Total-variation distance on the merged atom set (atoms matched within `tol`).
    pub fn tv_distance(&self, other: &Self, tol: f64) -> f64 {
        let (a, b) = (self, other);
        let (mut i, mut j) = (0, 0);
        let mut d = 0.0;
        while i < a.len() || j < b.len() {
            if j == b.len() || (i < a.len() && a.atoms[i] < b.atoms[j] - tol) {
                d += a.weights[i];
                i += 1;
            } else if i == a.len() || b.atoms[j] < a.atoms[i] - tol {
                d += b.weights[j];
                j += 1;
            } else {
                d += (a.weights[i] - b.weights[j]).abs();
                i += 1;
                j += 1;
            }
        }
        0.5 * d
    }

    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["atom", "weight"])?;
        for (a, p) in self.atoms.iter().zip(&self.weights) {
            wr.write_record([format!("{a:.17e}"), format!("{p:.17e}")])?;
        }
        wr.flush()?;
        Ok(())
    }

    /// Reads `atom,weight` rows (weight column optional, uniform if absent); rows need not be sorted.
    pub fn read_csv<R: std::io::Read>(r: R) -> Result<Self> {
        let mut rd = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
        let headers = rd.headers()?.clone();
        let has_weight = headers.len() >= 2;
        let mut vals = Vec::new();
        let mut ws = Vec::new();
        for rec in rd.records() {
            let rec = rec?;
            let parse = |k: usize| -> Result<f64> {
                rec.get(k)
                    .ok_or_else(|| Error::invalid("short CSV row"))?
                    .parse::<f64>()
                    .map_err(|e| Error::invalid(format!("bad number in marginal CSV: {e}")))
            };
            vals.push(parse(0)?);
            if has_weight {
                ws.push(parse(1)?);
            }
        }
        Self::from_values(&vals, has_weight.then_some(ws.as_slice()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn sorts_and_merges() {
        let m = DiscreteMarginal::from_values(&[3.0, 1.0, 2.0], None).unwrap();
        assert_eq!(m.atoms(), &[1.0, 2.0, 3.0]);
        assert!(m.weights().iter().all(|w| (w - 1.0 / 3.0).abs() < 1e-15));
        let m = DiscreteMarginal::from_values(&[1.0, 1.0, 2.0], None).unwrap();
        assert_eq!(m.atoms(), &[1.0, 2.0]);
        assert!((m.weights()[0] - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn tanh_field_gives_distinct_atoms() {
        let v: Vec<f64> = (0..101).map(|k| (-10.0 + 0.2 * k as f64) / 2f64.sqrt()).map(f64::tanh).collect();
        let m = DiscreteMarginal::from_values(&v, None).unwrap();
        assert_eq!(m.len(), 101);
    }

    #[test]
    fn rejects_invalid() {
        assert!(DiscreteMarginal::from_values(&[], None).is_err());
        assert!(DiscreteMarginal::new(vec![1.0, 1.0], vec![0.5, 0.5]).is_err());
        assert!(DiscreteMarginal::new(vec![1.0, 2.0], vec![0.5, 0.6]).is_err());
        assert!(DiscreteMarginal::from_values(&[1.0], Some(&[0.0])).is_err());
    }

    #[test]
    fn quantile_is_left_continuous() {
        let m = DiscreteMarginal::uniform(vec![0.0, 1.0, 2.0]).unwrap();
        assert_eq!(m.quantile(0.0), 0.0);
        assert_eq!(m.quantile(1.0 / 3.0), 0.0);
        assert_eq!(m.quantile(0.34), 1.0);
        assert_eq!(m.quantile(1.0), 2.0);
    }

    #[test]
    fn csv_roundtrip() {
        let m = DiscreteMarginal::new(vec![-0.5, 0.25, 3.0], vec![0.2, 0.3, 0.5]).unwrap();
        let mut buf = Vec::new();
        m.write_csv(&mut buf).unwrap();
        let back = DiscreteMarginal::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back.atoms(), m.atoms());
        assert!(back.tv_distance(&m, 0.0) < 1e-15);
    }

    proptest! {
        #[test]
        fn from_values_is_a_probability(vals in prop::collection::vec(-10i32..10, 1..40)) {
            let v: Vec<f64> = vals.iter().map(|&x| f64::from(x) / 4.0).collect();
            let m = DiscreteMarginal::from_values(&v, None).unwrap();
            prop_assert!((m.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!(m.atoms().windows(2).all(|w| w[0] < w[1]));
            let f = m.flipped(-1).flipped(-1);
            prop_assert_eq!(f, m);
        }
    }
}

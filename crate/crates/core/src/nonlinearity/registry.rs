//! Named built-in specs and the plain-text `key = value` config format.
//!
//! ```text
//! # comments start with '#'
//! name = ac-quadratic
//! m = 3
//! box_1_min = -1
//! box_1_max = 1
//! ```
//!
//! Extra keys: `coef` (pairwise-sum), `seed` or `a_i_j` (quadratic-form).
//! Axes without explicit bounds take the built-in default box.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use super::{
    AcLogSumExp, AcQuadratic, BoxDomain, Nonlinearity, NonlinearitySpec, PairwiseSum, QuadraticCoupling, QuadraticForm,
    Zero,
};
use crate::{Error, Result};

pub const NAMES: &[&str] =
    &["ac-quadratic", "ac-logsumexp", "quadratic-coupling", "pairwise-sum", "quadratic-form", "zero"];

/// Parsed config; values are kept as strings until the spec is built.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SpecConfig {
    pub entries: BTreeMap<String, String>,
}

impl SpecConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", lineno + 1)))?;
            let (k, v) = (k.trim().to_string(), v.trim().to_string());
            if k.is_empty() || v.is_empty() {
                return Err(Error::Config(format!("line {}: empty key or value", lineno + 1)));
            }
            if entries.insert(k.clone(), v).is_some() {
                return Err(Error::Config(format!("line {}: duplicate key `{k}`", lineno + 1)));
            }
        }
        Ok(Self { entries })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| Error::Config(format!("cannot read spec config {}: {e}", path.as_ref().display())))?;
        Self::parse(&text)
    }

    fn get<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.entries.get(key) {
            None => Ok(None),
            Some(v) => v.parse().map(Some).map_err(|_| Error::Config(format!("cannot parse `{key} = {v}`"))),
        }
    }

    pub fn name(&self) -> Result<&str> {
        self.entries.get("name").map(String::as_str).ok_or_else(|| Error::Config("missing `name`".into()))
    }

    pub fn build(&self) -> Result<NonlinearitySpec> {
        let name = self.name()?;
        let m: usize = match self.get("m")? {
            Some(m) => m,
            None if name == "quadratic-coupling" => 2,
            None => return Err(Error::Config("missing `m`".into())),
        };
        for key in self.entries.keys() {
            let known = matches!(key.as_str(), "name" | "m" | "coef" | "seed")
                || parse_box_key(key, m).is_some()
                || parse_matrix_key(key, m).is_some();
            if !known {
                return Err(Error::Config(format!("unknown or out-of-range key `{key}`")));
            }
        }
        let mut domain = default_domain(name, m)?;
        for i in 0..m {
            if let Some(v) = self.get::<f64>(&format!("box_{}_min", i + 1))? {
                domain.lo[i] = v;
            }
            if let Some(v) = self.get::<f64>(&format!("box_{}_max", i + 1))? {
                domain.hi[i] = v;
            }
        }
        let domain = BoxDomain::new(domain.lo, domain.hi).map_err(|e| Error::Config(e.to_string()))?;
        let params = Params { coef: self.get("coef")?, seed: self.get("seed")?, matrix: self.matrix(m)? };
        build_with(name, m, domain, &params)
    }

    fn matrix(&self, m: usize) -> Result<Option<Vec<f64>>> {
        let keys: Vec<_> = self.entries.keys().filter_map(|k| parse_matrix_key(k, m)).collect();
        if keys.is_empty() {
            return Ok(None);
        }
        let mut a = vec![0.0; m * m];
        for (i, j) in keys {
            let v: f64 = self.get(&format!("a_{}_{}", i + 1, j + 1))?.unwrap_or(0.0);
            a[i * m + j] = v;
            if !self.entries.contains_key(&format!("a_{}_{}", j + 1, i + 1)) {
                a[j * m + i] = v;
            }
        }
        Ok(Some(a))
    }
}

fn parse_index_pair(rest: &str, sep: &str, m: usize) -> Option<(usize, usize)> {
    let (a, b) = rest.split_once(sep)?;
    let (a, b): (usize, usize) = (a.parse().ok()?, b.parse().ok()?);
    (1..=m).contains(&a).then_some(())?;
    (1..=m).contains(&b).then_some((a - 1, b - 1))
}

fn parse_box_key(key: &str, m: usize) -> Option<usize> {
    let rest = key.strip_prefix("box_")?;
    let (i, side) = rest.split_once('_')?;
    let i: usize = i.parse().ok()?;
    ((1..=m).contains(&i) && (side == "min" || side == "max")).then_some(i - 1)
}

fn parse_matrix_key(key: &str, m: usize) -> Option<(usize, usize)> {
    parse_index_pair(key.strip_prefix("a_")?, "_", m)
}

/// Optional parameters of the parameterized built-ins.
#[derive(Debug, Clone, Default)]
pub struct Params {
    pub coef: Option<f64>,
    pub seed: Option<u64>,
    pub matrix: Option<Vec<f64>>,
}

pub fn default_domain(name: &str, m: usize) -> Result<BoxDomain> {
    match name {
        "ac-quadratic" | "zero" | "pairwise-sum" | "quadratic-form" => BoxDomain::cube(m, -1.0, 1.0),
        "ac-logsumexp" => BoxDomain::cube(m, 0.1, 0.9),
        "quadratic-coupling" => BoxDomain::cube(2, 0.01, 3.0),
        other => Err(Error::Config(format!("unknown spec `{other}`; known: {}", NAMES.join(", ")))),
    }
}

pub fn build(name: &str, m: usize) -> Result<NonlinearitySpec> {
    build_with(name, m, default_domain(name, m)?, &Params::default())
}

pub fn build_with(name: &str, m: usize, domain: BoxDomain, params: &Params) -> Result<NonlinearitySpec> {
    if m < 2 {
        return Err(Error::Config(format!("m must be at least 2, got {m}")));
    }
    let h: Arc<dyn Nonlinearity> = match name {
        "ac-quadratic" => Arc::new(AcQuadratic { m }),
        "ac-logsumexp" => Arc::new(AcLogSumExp { m }),
        "quadratic-coupling" => {
            if m != 2 {
                return Err(Error::Config("quadratic-coupling has m = 2".into()));
            }
            Arc::new(QuadraticCoupling)
        }
        "pairwise-sum" => Arc::new(PairwiseSum { m, coef: params.coef.unwrap_or(1.0) }),
        "quadratic-form" => match &params.matrix {
            Some(a) => Arc::new(QuadraticForm::new(m, a.clone())?),
            None => Arc::new(QuadraticForm::random_negative(m, params.seed.unwrap_or(super::DEFAULT_SEED))),
        },
        "zero" => Arc::new(Zero { m }),
        other => return Err(Error::Config(format!("unknown spec `{other}`; known: {}", NAMES.join(", ")))),
    };
    NonlinearitySpec::new(h, domain).map_err(|e| Error::Config(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_name_m_and_box() {
        let c = SpecConfig::parse("# test\nname = ac-quadratic\nm = 3\nbox_2_min = -0.5 # inline\n").unwrap();
        let s = c.build().unwrap();
        assert_eq!(s.m(), 3);
        assert_eq!(s.domain.lo, vec![-1.0, -0.5, -1.0]);
        assert_eq!(s.domain.hi, vec![1.0; 3]);
    }

    #[test]
    fn pairwise_config() {
        let s = SpecConfig::parse("name = pairwise-sum\nm = 3\ncoef = 1\n").unwrap().build().unwrap();
        assert_eq!(s.value(&[1.0, 2.0, 3.0]).unwrap(), 11.0);
    }

    #[test]
    fn matrix_entries_are_symmetrized() {
        let s = SpecConfig::parse("name = quadratic-form\nm = 2\na_1_2 = -1\n").unwrap().build().unwrap();
        assert_eq!(s.value(&[1.0, 1.0]).unwrap(), -2.0);
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(SpecConfig::parse("name ac").is_err());
        assert!(SpecConfig::parse("name = a\nname = b").is_err());
        assert!(SpecConfig::parse("name = nope\nm = 2").unwrap().build().is_err());
        assert!(SpecConfig::parse("name = ac-quadratic\nm = 2\nbox_3_min = 0").unwrap().build().is_err());
        assert!(SpecConfig::parse("name = ac-quadratic\nm = 2\nbox_1_min = 2").unwrap().build().is_err());
        assert!(SpecConfig::parse("name = ac-quadratic\nm = x").unwrap().build().is_err());
        assert!(SpecConfig::load("/nonexistent/path.cfg").is_err());
    }

    #[test]
    fn quadratic_coupling_defaults_to_two() {
        let s = SpecConfig::parse("name = quadratic-coupling").unwrap().build().unwrap();
        assert_eq!(s.m(), 2);
    }
}

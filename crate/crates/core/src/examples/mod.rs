//! End-to-end runs of the three worked non-linearities: the Allen–Cahn system
//! with quadratic interaction, the log-sum-exp variant, and the quadratic
//! coupling `½p₁²p₂²`.
//!
//! Each run threads a case through classification, the boundary value solver,
//! decoupling and the transport certificate, recording one [`Check`] per
//! verified statement. The first failing check names the failure stage.

mod ac_logsumexp;
mod ac_quadratic;
mod quadratic_coupling;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::decouple::DecouplingPotentials;
use crate::mmot1d::DualPotentials;
use crate::pde::FieldBundle;
use crate::Result;

pub use ac_logsumexp::{run_ac_logsumexp, sign_box};
pub use ac_quadratic::run_ac_quadratic;
pub use quadratic_coupling::{explicit_potential, run_quadratic_coupling, QuadraticCouplingParams};

pub const CASES: [&str; 3] = ["ac-quadratic", "ac-logsumexp", "quadratic-coupling"];

/// `tanh(x/√2)`, the heteroclinic of `u'' = u³ − u`.
pub fn kink(x: f64) -> f64 {
    (x / std::f64::consts::SQRT_2).tanh()
}

pub fn kink_prime(x: f64) -> f64 {
    let c = (x / std::f64::consts::SQRT_2).cosh();
    1.0 / (std::f64::consts::SQRT_2 * c * c)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    /// `NaN` (serialized as `null`) when the stage could not run.
    #[serde(deserialize_with = "nullable")]
    pub value: f64,
    #[serde(deserialize_with = "nullable")]
    pub threshold: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExampleReport {
    pub case: String,
    pub parameters: serde_json::Value,
    pub checks: Vec<Check>,
    pub failure_stage: Option<String>,
    pub pass: bool,
    #[serde(deserialize_with = "nullable_map")]
    pub observables: BTreeMap<String, f64>,
}

// Non-finite numbers are written as `null`; read them back as `NaN`.
fn nullable<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
}

fn nullable_map<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<BTreeMap<String, f64>, D::Error> {
    let raw = BTreeMap::<String, Option<f64>>::deserialize(d)?;
    Ok(raw.into_iter().map(|(k, v)| (k, v.unwrap_or(f64::NAN))).collect())
}

/// Report plus the data behind it.
#[derive(Debug, Clone)]
pub struct ExampleRun {
    pub report: ExampleReport,
    pub profile: Option<FieldBundle>,
    pub potentials: Option<DecouplingPotentials>,
}

impl ExampleRun {
    /// `report.json`, `profile.csv` and the potential tables under `dir`.
    pub fn write_artifacts(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        let mut out = Vec::new();
        if let Some(p) = &self.profile {
            let path = dir.join("profile.csv");
            p.write_csv(crate::io::create(&path)?)?;
            out.push(path);
        }
        if let Some(v) = &self.potentials {
            out.extend(v.write_artifacts(dir, &serde_json::to_value(&self.report.checks)?)?);
        }
        let path = dir.join("report.json");
        crate::io::write_json(&path, &self.report)?;
        out.push(path);
        Ok(out)
    }
}

/// Collects checks and stops at the first stage that errors.
pub(crate) struct Recorder {
    case: String,
    parameters: serde_json::Value,
    checks: Vec<Check>,
    observables: BTreeMap<String, f64>,
}

impl Recorder {
    pub(crate) fn new(case: &str, parameters: serde_json::Value) -> Self {
        Self { case: case.into(), parameters, checks: Vec::new(), observables: BTreeMap::new() }
    }

    pub(crate) fn check(&mut self, name: &str, pass: bool, value: f64, threshold: f64) -> bool {
        self.checks.push(Check { name: name.into(), pass, value, threshold, detail: None });
        pass
    }

    /// `value ≤ threshold`.
    pub(crate) fn at_most(&mut self, name: &str, value: f64, threshold: f64) -> bool {
        self.check(name, value <= threshold, value, threshold)
    }

    pub(crate) fn flag(&mut self, name: &str, pass: bool) -> bool {
        self.check(name, pass, if pass { 1.0 } else { 0.0 }, 1.0)
    }

    pub(crate) fn note(&mut self, key: &str, value: f64) {
        self.observables.insert(key.into(), value);
    }

    /// Records a stage that could not run.
    pub(crate) fn error(&mut self, name: &str, err: &crate::Error) {
        self.checks.push(Check {
            name: name.into(),
            pass: false,
            value: f64::NAN,
            threshold: f64::NAN,
            detail: Some(err.to_string()),
        });
    }

    pub(crate) fn finish(self, profile: Option<FieldBundle>, potentials: Option<DecouplingPotentials>) -> ExampleRun {
        let failure_stage = self.checks.iter().find(|c| !c.pass).map(|c| c.name.clone());
        let report = ExampleReport {
            case: self.case,
            parameters: self.parameters,
            pass: failure_stage.is_none() && !self.checks.is_empty(),
            checks: self.checks,
            failure_stage,
            observables: self.observables,
        };
        ExampleRun { report, profile, potentials }
    }
}

/// Runs `f`, turning an error into a failed check named `stage`.
pub(crate) fn stage<T>(rec: &mut Recorder, name: &str, f: impl FnOnce() -> Result<T>) -> Option<T> {
    match f() {
        Ok(v) => Some(v),
        Err(e) => {
            rec.error(name, &e);
            None
        }
    }
}

/// For each pair `(i, j)`, how far the nodal map `uᵢ(xₖ) ↦ uⱼ(xₖ)` is from a
/// single monotone function; zero when the components share level sets.
pub fn common_level_set_discrepancy(field: &FieldBundle) -> f64 {
    let m = field.m();
    let mut worst: f64 = 0.0;
    for i in 0..m {
        let mut order: Vec<usize> = (0..field.n()).collect();
        order.sort_by(|&a, &b| field.components[i][a].total_cmp(&field.components[i][b]));
        for j in 0..m {
            if i == j {
                continue;
            }
            let v: Vec<f64> = order.iter().map(|&k| field.components[j][k]).collect();
            let dir = (v[v.len() - 1] - v[0]).signum();
            let bad = v.windows(2).map(|w| (-dir * (w[1] - w[0])).max(0.0)).fold(0.0, f64::max);
            worst = worst.max(bad);
        }
    }
    worst
}

/// `max |V_dec,ᵢ(uᵢ(xₖ)) − V_ot,ᵢ(uᵢ(xₖ)) − cᵢ|` with `cᵢ` aligning the two at the base node.
pub fn duality_bridge_gap(field: &FieldBundle, dec: &DecouplingPotentials, ot: &DualPotentials) -> f64 {
    let base = dec.gauge.base_node;
    let mut worst: f64 = 0.0;
    for i in 0..field.m() {
        let u = &field.components[i];
        let c = dec.curves[i].eval(u[base]) - ot.tables[i].eval(u[base]);
        for &x in u {
            worst = worst.max((dec.curves[i].eval(x) - ot.tables[i].eval(x) - c).abs());
        }
    }
    worst
}

#[cfg(test)]
mod tests;

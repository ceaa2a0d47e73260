use serde::{Deserialize, Serialize};

/// Numerical thresholds shared by the classifiers and verifications.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Margin for strict sign tests on second derivatives.
    pub sign: f64,
    /// Feasibility / support / duality-gap threshold for transport certificates.
    pub dual: f64,
    /// Threshold for the decoupling identities and Modica-type estimates.
    pub decouple: f64,
    /// Slack on energy comparisons after rearrangement.
    pub rearr: f64,
    /// Max-norm residual at which the Newton iteration stops.
    pub newton: f64,
    /// Strictness margin on interior forward differences.
    pub mono: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { sign: 1e-10, dual: 1e-8, decouple: 1e-6, rearr: 1e-6, newton: 1e-10, mono: 1e-12 }
    }
}

impl Tolerances {
    pub fn validate(&self) -> crate::Result<()> {
        let all = [self.sign, self.dual, self.decouple, self.rearr, self.newton, self.mono];
        if all.iter().all(|t| t.is_finite() && *t > 0.0) {
            Ok(())
        } else {
            Err(crate::Error::Config(format!("tolerances must be positive: {self:?}")))
        }
    }
}

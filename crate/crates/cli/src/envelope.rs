use mmot_decouple::examples::Check;
use serde::Serialize;

/// The JSON document every command prints.
#[derive(Debug, Serialize)]
pub struct Envelope {
    pub command: String,
    pub seed: u64,
    pub pass: bool,
    /// Name of the first failing check.
    pub failure_stage: Option<String>,
    pub checks: Vec<Check>,
    pub data: serde_json::Value,
}

impl Envelope {
    pub fn new(command: &str, seed: u64, checks: Vec<Check>, data: serde_json::Value) -> Self {
        let failure_stage = checks.iter().find(|c| !c.pass).map(|c| c.name.clone());
        Self { command: command.into(), seed, pass: failure_stage.is_none(), failure_stage, checks, data }
    }

    pub fn error(command: &str, seed: u64, err: &mmot_decouple::Error) -> Self {
        Self {
            command: command.into(),
            seed,
            pass: false,
            failure_stage: Some("input".into()),
            checks: Vec::new(),
            data: serde_json::json!({ "error": err.to_string() }),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).unwrap_or_else(|e| format!("{{\"error\": \"{e}\"}}"))
    }
}

/// Accumulates checks for one command.
#[derive(Default)]
pub struct Checks(pub Vec<Check>);

impl Checks {
    pub fn at_most(&mut self, name: &str, value: f64, threshold: f64) {
        self.push(name, value <= threshold, value, threshold);
    }

    pub fn flag(&mut self, name: &str, pass: bool) {
        self.push(name, pass, if pass { 1.0 } else { 0.0 }, 1.0);
    }

    pub fn push(&mut self, name: &str, pass: bool, value: f64, threshold: f64) {
        self.0.push(Check { name: name.into(), pass, value, threshold, detail: None });
    }
}

//! Check records and the JSON report. Reports carry no timing and no
//! environment data, so identical scene bytes and seed give identical output.

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
}

/// One verified statement: `residual` is compared against `tolerance` by the
/// check itself; `witnesses` locate the worst case.
#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub status: Status,
    pub residual: f64,
    pub tolerance: f64,
    pub witnesses: Value,
}

impl Check {
    /// Passes iff `residual < tolerance` (NaN fails).
    pub fn below(name: impl Into<String>, residual: f64, tolerance: f64, witnesses: Value) -> Self {
        Self::from_bool(name, residual < tolerance, residual, tolerance, witnesses)
    }

    pub fn from_bool(name: impl Into<String>, ok: bool, residual: f64, tolerance: f64, witnesses: Value) -> Self {
        Self {
            name: name.into(),
            status: if ok { Status::Pass } else { Status::Fail },
            residual,
            tolerance,
            witnesses,
        }
    }

    /// A check that could not be evaluated.
    pub fn error(name: impl Into<String>, tolerance: f64, err: impl std::fmt::Display) -> Self {
        Self::from_bool(name, false, f64::NAN, tolerance, serde_json::json!({ "error": err.to_string() }))
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub command: String,
    pub scene_sha256: String,
    pub seed: u64,
    pub all_pass: bool,
    pub checks: Vec<Check>,
    pub notes: Vec<String>,
    /// Command-specific payload (certificates, tables).
    pub data: Value,
}

impl Report {
    pub fn new(command: &str, scene_bytes: &[u8], seed: u64) -> Self {
        Self {
            command: command.to_string(),
            scene_sha256: sha256_hex(scene_bytes),
            seed,
            all_pass: true,
            checks: Vec::new(),
            notes: Vec::new(),
            data: Value::Null,
        }
    }

    pub fn push(&mut self, c: Check) {
        self.all_pass &= c.passed();
        self.checks.push(c);
    }

    pub fn failing(&self) -> Vec<&str> {
        self.checks.iter().filter(|c| !c.passed()).map(|c| c.name.as_str()).collect()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nan_residual_fails() {
        assert!(!Check::below("x", f64::NAN, 1.0, Value::Null).passed());
        assert!(Check::below("x", 0.5, 1.0, Value::Null).passed());
    }

    #[test]
    fn one_failure_flips_the_report() {
        let mut r = Report::new("check", b"{}", 0);
        r.push(Check::below("a", 0.0, 1.0, Value::Null));
        assert!(r.all_pass);
        r.push(Check::below("b", 2.0, 1.0, Value::Null));
        assert!(!r.all_pass);
        assert_eq!(r.failing(), vec!["b"]);
    }
}

//! Machine-readable report files: deterministic JSON with a digest of the
//! canonicalized inputs, one record per named check, and optional solution
//! samples.

use crate::schema::{c_to, mat_to, CNum, Matrix, ProblemFile};
use aip_core::matkit::{CMat, C64};
use aip_core::report::VerificationReport;
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Serialize)]
pub struct ReportFile {
    pub schema_version: String,
    pub command: String,
    pub inputs_digest: String,
    pub grid: Vec<CNum>,
    pub checks: Vec<CheckOut>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub solutions: Vec<SolutionSummary>,
    pub passed: bool,
}

#[derive(Serialize)]
pub struct CheckOut {
    pub name: String,
    pub anchor: String,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "String::is_empty")]
    pub note: String,
}

#[derive(Serialize)]
pub struct SolutionSummary {
    pub parameter: usize,
    pub samples: Vec<SampleOut>,
}

#[derive(Serialize)]
pub struct SampleOut {
    pub lambda: CNum,
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<Matrix>,
}

/// Digest of the canonical re-serialization of the parsed problem, so the
/// digest is independent of input whitespace and key order quirks.
pub fn inputs_digest(pf: &ProblemFile) -> String {
    let canon = serde_json::to_string(pf).unwrap_or_default();
    let mut hasher = Sha256::new();
    hasher.update(canon.as_bytes());
    let out = hasher.finalize();
    out.iter().map(|b| format!("{b:02x}")).collect()
}

impl ReportFile {
    pub fn new(command: &str, pf: &ProblemFile, grid: &[C64]) -> Self {
        ReportFile {
            schema_version: "1".to_string(),
            command: command.to_string(),
            inputs_digest: inputs_digest(pf),
            grid: grid.iter().map(|&z| c_to(z)).collect(),
            checks: Vec::new(),
            solutions: Vec::new(),
            passed: true,
        }
    }

    pub fn absorb(&mut self, prefix: &str, rep: &VerificationReport) {
        for c in &rep.checks {
            self.checks.push(CheckOut {
                name: if prefix.is_empty() { c.name.clone() } else { format!("{prefix}/{}", c.name) },
                anchor: c.anchor.clone(),
                residual: c.residual,
                tolerance: c.tolerance,
                pass: c.pass,
                note: c.note.clone(),
            });
            self.passed &= c.pass;
        }
    }

    pub fn push_sample(&mut self, parameter: usize, lambda: C64, m: Option<&CMat>) {
        if self.solutions.last().map(|s| s.parameter) != Some(parameter) {
            self.solutions.push(SolutionSummary { parameter, samples: Vec::new() });
        }
        let entry = SampleOut {
            lambda: c_to(lambda),
            status: if m.is_some() { "ok".into() } else { "pole".into() },
            m: m.map(mat_to),
        };
        self.solutions.last_mut().unwrap().samples.push(entry);
    }

    pub fn render(&self) -> String {
        serde_json::to_string_pretty(self).unwrap_or_else(|e| format!("{{\"error\":\"{e}\"}}"))
    }
}

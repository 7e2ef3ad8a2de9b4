//! Named verification checks with residuals, tolerances and verdicts.
//!
//! Failures are recorded, never thrown: a report collects every check that
//! was run so callers (and the CLI) can render or serialize the whole
//! picture deterministically.

use std::fmt;

/// One named check. `anchor` is a stable machine-readable identifier of the
/// identity or property being tested (e.g. `"structure-identity"`,
/// `"kernel-psd"`), `residual` the measured defect and `tolerance` the
/// threshold it was compared against.
#[derive(Clone, Debug)]
pub struct CheckRecord {
    pub name: String,
    pub anchor: String,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    /// Optional free-form detail (grid point, index, skipped-reason).
    pub note: String,
}

#[derive(Clone, Debug, Default)]
pub struct VerificationReport {
    pub checks: Vec<CheckRecord>,
}

impl VerificationReport {
    pub fn new() -> Self {
        Self::default()
    }

    /// Record a residual-style check: passes iff `residual <= tolerance`.
    pub fn residual_check(&mut self, name: &str, anchor: &str, residual: f64, tolerance: f64) -> bool {
        let pass = residual.is_finite() && residual <= tolerance;
        self.checks.push(CheckRecord {
            name: name.to_string(),
            anchor: anchor.to_string(),
            residual,
            tolerance,
            pass,
            note: String::new(),
        });
        pass
    }

    /// Record a lower-bound check (e.g. smallest eigenvalue): passes iff
    /// `value >= bound`.
    pub fn bound_check(&mut self, name: &str, anchor: &str, value: f64, bound: f64) -> bool {
        let pass = value.is_finite() && value >= bound;
        self.checks.push(CheckRecord {
            name: name.to_string(),
            anchor: anchor.to_string(),
            residual: value,
            tolerance: bound,
            pass,
            note: String::new(),
        });
        pass
    }

    /// Record a boolean verdict with no numeric content.
    pub fn flag_check(&mut self, name: &str, anchor: &str, pass: bool, note: &str) -> bool {
        self.checks.push(CheckRecord {
            name: name.to_string(),
            anchor: anchor.to_string(),
            residual: if pass { 0.0 } else { 1.0 },
            tolerance: 0.0,
            pass,
            note: note.to_string(),
        });
        pass
    }

    /// Annotate the most recently added check.
    pub fn note_last(&mut self, note: &str) {
        if let Some(last) = self.checks.last_mut() {
            last.note = note.to_string();
        }
    }

    pub fn merge(&mut self, other: VerificationReport) {
        self.checks.extend(other.checks);
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failed(&self) -> Vec<&CheckRecord> {
        self.checks.iter().filter(|c| !c.pass).collect()
    }

    pub fn find(&self, name: &str) -> Option<&CheckRecord> {
        self.checks.iter().find(|c| c.name == name)
    }
}

impl fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(
                f,
                "[{}] {:<40} residual {:>12.4e}  tol {:>9.1e}  {}{}",
                if c.pass { "pass" } else { "FAIL" },
                c.name,
                c.residual,
                c.tolerance,
                c.anchor,
                if c.note.is_empty() { String::new() } else { format!("  ({})", c.note) },
            )?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_collects_and_judges() {
        let mut r = VerificationReport::new();
        assert!(r.residual_check("a", "x", 1e-12, 1e-10));
        assert!(!r.residual_check("b", "y", 1e-8, 1e-10));
        assert!(r.bound_check("c", "z", -1e-12, -1e-10));
        assert!(!r.all_passed());
        assert_eq!(r.failed().len(), 1);
        assert!(!r.find("b").unwrap().pass);
    }

    #[test]
    fn nan_residual_fails() {
        let mut r = VerificationReport::new();
        assert!(!r.residual_check("nan", "w", f64::NAN, 1e-10));
    }
}

//! Residual bookkeeping shared by the validators.

use serde::{Deserialize, Serialize};

use crate::linalg::{frob, CMat};

/// One matrix identity `lhs = rhs`, measured in the Frobenius norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Residual {
    pub name: String,
    /// `||lhs - rhs||_F`.
    pub absolute: f64,
    /// `||lhs - rhs||_F / (1 + ||lhs||_F + ||rhs||_F)`; this is what is
    /// compared against the tolerance.
    pub relative: f64,
    pub passed: bool,
    /// Reported for reference only; does not enter the verdict.
    #[serde(default)]
    pub informational: bool,
}

/// A yes/no condition that is not a residual.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub tolerance: f64,
    pub norm: String,
    pub residuals: Vec<Residual>,
    pub checks: Vec<Check>,
    pub verdict: bool,
}

impl ValidationReport {
    pub fn new(tolerance: f64) -> Self {
        ValidationReport {
            tolerance,
            norm: "relative Frobenius".into(),
            residuals: Vec::new(),
            checks: Vec::new(),
            verdict: true,
        }
    }

    pub fn push_matrices(&mut self, name: impl Into<String>, lhs: &CMat, rhs: &CMat) {
        let absolute = frob(&(lhs - rhs));
        let relative = absolute / (1.0 + frob(lhs) + frob(rhs));
        self.push_value(name, absolute, relative);
    }

    pub fn push_value(&mut self, name: impl Into<String>, absolute: f64, relative: f64) {
        let passed = relative < self.tolerance;
        self.verdict &= passed;
        self.residuals.push(Residual {
            name: name.into(),
            absolute,
            relative,
            passed,
            informational: false,
        });
    }

    pub fn push_informational(&mut self, name: impl Into<String>, lhs: &CMat, rhs: &CMat) {
        let absolute = frob(&(lhs - rhs));
        let relative = absolute / (1.0 + frob(lhs) + frob(rhs));
        self.residuals.push(Residual {
            name: name.into(),
            absolute,
            relative,
            passed: relative < self.tolerance,
            informational: true,
        });
    }

    pub fn push_check(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.verdict &= passed;
        self.checks.push(Check {
            name: name.into(),
            passed,
            detail: detail.into(),
        });
    }

    /// Largest relative residual among the ones that count.
    pub fn max_relative(&self) -> f64 {
        self.residuals
            .iter()
            .filter(|r| !r.informational)
            .map(|r| r.relative)
            .fold(0.0, f64::max)
    }

    pub fn get(&self, name: &str) -> Option<&Residual> {
        self.residuals.iter().find(|r| r.name == name)
    }

    pub fn merge(&mut self, other: ValidationReport) {
        self.verdict &= other.verdict;
        self.residuals.extend(other.residuals);
        self.checks.extend(other.checks);
    }
}

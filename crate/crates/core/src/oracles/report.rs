use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::Result;

/// One measured quantity against its bound; passes when `deviation ≤ tolerance`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub deviation: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    pub fn new(name: impl Into<String>, deviation: f64, tolerance: f64) -> Self {
        Check {
            name: name.into(),
            deviation,
            tolerance,
            passed: deviation <= tolerance,
        }
    }

    fn severity(&self) -> f64 {
        if !self.passed {
            f64::INFINITY
        } else if self.tolerance > 0.0 {
            self.deviation / self.tolerance
        } else {
            0.0
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub name: String,
    pub passed: bool,
    /// Deviation and tolerance of the tightest check.
    pub deviation: f64,
    pub tolerance: f64,
    pub parameters: BTreeMap<String, String>,
    pub checks: Vec<Check>,
}

impl OracleReport {
    pub fn new(name: impl Into<String>, parameters: BTreeMap<String, String>, checks: Vec<Check>) -> Self {
        let worst = checks
            .iter()
            .max_by(|a, b| a.severity().total_cmp(&b.severity()))
            .cloned()
            .unwrap_or_else(|| Check::new("empty", 0.0, 0.0));
        OracleReport {
            name: name.into(),
            passed: checks.iter().all(|c| c.passed),
            deviation: worst.deviation,
            tolerance: worst.tolerance,
            parameters,
            checks,
        }
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Reports of one oracle run plus the SHA-256 of their canonical JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub reports: Vec<OracleReport>,
    pub digest: String,
}

impl SuiteReport {
    pub fn new(reports: Vec<OracleReport>) -> Self {
        let canonical = serde_json::to_vec(&reports).expect("reports serialise");
        let digest = Sha256::digest(&canonical).iter().fold(String::new(), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        });
        SuiteReport { reports, digest }
    }

    pub fn passed(&self) -> bool {
        self.reports.iter().all(|r| r.passed)
    }

    pub fn get(&self, name: &str) -> Option<&OracleReport> {
        self.reports.iter().find(|r| r.name == name)
    }

    pub fn failures(&self) -> Vec<&str> {
        self.reports.iter().filter(|r| !r.passed).map(|r| r.name.as_str()).collect()
    }

    pub fn summary(&self) -> String {
        let mut out = String::new();
        for r in &self.reports {
            let _ = writeln!(
                out,
                "{:<4} {:<24} deviation {:.3e} (tolerance {:.1e})",
                if r.passed { "PASS" } else { "FAIL" },
                r.name,
                r.deviation,
                r.tolerance
            );
            for c in &r.checks {
                let _ = writeln!(
                    out,
                    "       {} {:<34} {:.3e} <= {:.1e}",
                    if c.passed { "ok " } else { "BAD" },
                    c.name,
                    c.deviation,
                    c.tolerance
                );
            }
        }
        let _ = writeln!(out, "digest {}", self.digest);
        out
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("reports serialise");
        std::fs::write(path, text + "\n")?;
        Ok(())
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| crate::Error::Config(format!("{}: {e}", path.display())))
    }
}

//! Report records, JSON emission and the human-readable table.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use crate::scenario::{Mode, SCHEMA_VERSION};

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct Record {
    pub check: String,
    pub target: String,
    pub index: usize,
    pub point: Option<Vec<f64>>,
    /// Absent when the evaluation failed; see `note`.
    pub residual: Option<f64>,
    pub extras: BTreeMap<String, f64>,
    pub tolerance: f64,
    pub mode: Mode,
    pub pass: bool,
    pub note: Option<String>,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct ToleranceEntry {
    pub check: String,
    pub mode: Mode,
    pub tolerance: f64,
    /// `default` or `override`, before `tol_scale`.
    pub source: String,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct Environment {
    pub curvature_convention: String,
    /// Sign of the fitted constant-curvature scalar on a positively curved chart.
    pub fitted_curvature_sign: f64,
    pub index_wiring: String,
    pub wiring_calibrated: bool,
    pub fd_step: String,
    pub fd_second_step_ratio: f64,
    pub minpoly_tolerance: f64,
    pub flow_step: Option<f64>,
    pub flow_duration: Option<f64>,
    pub halving_ratio: f64,
    pub seed: u64,
    pub tol_scale: f64,
    pub tolerances: Vec<ToleranceEntry>,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct Summary {
    pub records: usize,
    pub passed: usize,
    pub failed: usize,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct Report {
    pub schema_version: u32,
    pub scenario: String,
    pub overall_pass: bool,
    pub summary: Summary,
    pub environment: Environment,
    pub records: Vec<Record>,
    /// Seconds since the Unix epoch; the only nondeterministic field.
    pub generated_at: Option<u64>,
}

impl Report {
    pub fn new(scenario: String, environment: Environment, records: Vec<Record>) -> Self {
        let passed = records.iter().filter(|r| r.pass).count();
        let summary = Summary { records: records.len(), passed, failed: records.len() - passed };
        let generated_at = SystemTime::now().duration_since(UNIX_EPOCH).ok().map(|d| d.as_secs());
        Self {
            schema_version: SCHEMA_VERSION,
            scenario,
            overall_pass: summary.failed == 0,
            summary,
            environment,
            records,
            generated_at,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// JSON with the timestamp cleared, for comparing runs.
    pub fn canonical_json(&self) -> String {
        let mut copy = self.clone();
        copy.generated_at = None;
        copy.to_json()
    }

    pub fn records_for<'a>(&'a self, check: &'a str) -> impl Iterator<Item = &'a Record> + 'a {
        self.records.iter().filter(move |r| r.check == check)
    }

    /// One row per (check, target, mode) with the worst residual, then the failures.
    pub fn table(&self) -> String {
        let mut groups: BTreeMap<(&str, &str, Mode), Vec<&Record>> = BTreeMap::new();
        for r in &self.records {
            groups.entry((&r.check, &r.target, r.mode)).or_default().push(r);
        }
        let mut out = String::new();
        let _ = writeln!(out, "scenario {}", self.scenario);
        let _ = writeln!(
            out,
            "{:<26} {:<16} {:<10} {:>5} {:>11} {:>9}  status",
            "check", "target", "mode", "n", "worst", "tol"
        );
        for ((check, target, mode), rs) in &groups {
            let worst = rs.iter().filter_map(|r| r.residual).fold(None, |acc: Option<f64>, v| {
                Some(match (acc, mode) {
                    (None, _) => v,
                    (Some(a), Mode::Violation) => a.min(v),
                    (Some(a), _) => a.max(v),
                })
            });
            let ok = rs.iter().filter(|r| r.pass).count();
            let status =
                if ok == rs.len() { "PASS".to_string() } else { format!("FAIL ({}/{})", rs.len() - ok, rs.len()) };
            let worst = worst.map_or("-".to_string(), |w| format!("{w:.3e}"));
            let _ = writeln!(
                out,
                "{:<26} {:<16} {:<10} {:>5} {:>11} {:>9.1e}  {}",
                check,
                target,
                format!("{mode:?}").to_lowercase(),
                rs.len(),
                worst,
                rs[0].tolerance,
                status
            );
        }
        for r in self.records.iter().filter(|r| !r.pass) {
            let _ = writeln!(
                out,
                "  failed: {} {}#{} residual {:?} tol {:e}{}",
                r.check,
                r.target,
                r.index,
                r.residual,
                r.tolerance,
                r.note.as_ref().map(|n| format!(" ({n})")).unwrap_or_default()
            );
        }
        let _ = writeln!(
            out,
            "overall: {} ({} of {} records passed)",
            if self.overall_pass { "PASS" } else { "FAIL" },
            self.summary.passed,
            self.summary.records
        );
        out
    }
}

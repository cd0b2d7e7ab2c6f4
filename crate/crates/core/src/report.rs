//! Stage-by-stage audit trail of what each processing step found and changed.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::model::{QualityFlag, Timestamp, VoyageDataset};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckDetail {
    pub timestamp: Option<Timestamp>,
    pub variable: String,
    pub expected: Option<f64>,
    pub observed: Option<f64>,
    pub verdict: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub metrics: BTreeMap<String, f64>,
    pub message: String,
}

impl CheckResult {
    pub fn new(name: impl Into<String>, passed: bool) -> Self {
        Self {
            name: name.into(),
            passed,
            metrics: BTreeMap::new(),
            message: String::new(),
        }
    }

    /// Non-finite metrics are dropped so the report always serializes.
    pub fn metric(mut self, key: &str, value: f64) -> Self {
        if value.is_finite() {
            self.metrics.insert(key.to_string(), value);
        }
        self
    }

    pub fn message(mut self, msg: impl Into<String>) -> Self {
        self.message = msg.into();
        self
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct StageEntry {
    pub stage: String,
    pub flag_counts: BTreeMap<QualityFlag, usize>,
    pub corrections: Vec<String>,
    pub checks: Vec<CheckResult>,
    pub details: Vec<CheckDetail>,
    pub warnings: Vec<String>,
    pub skipped: Option<String>,
}

impl StageEntry {
    pub fn new(stage: impl Into<String>) -> Self {
        Self {
            stage: stage.into(),
            ..Default::default()
        }
    }

    pub fn skipped(stage: impl Into<String>, reason: impl Into<String>) -> Self {
        Self {
            stage: stage.into(),
            skipped: Some(reason.into()),
            ..Default::default()
        }
    }

    pub fn warn(&mut self, msg: impl Into<String>) {
        self.warnings.push(msg.into());
    }

    pub fn correction(&mut self, msg: impl Into<String>) {
        self.corrections.push(msg.into());
    }

    pub fn check(&mut self, result: CheckResult) {
        self.checks.push(result);
    }

    pub fn detail(
        &mut self,
        timestamp: Option<Timestamp>,
        variable: &str,
        expected: Option<f64>,
        observed: Option<f64>,
        verdict: impl Into<String>,
    ) {
        self.details.push(CheckDetail {
            timestamp,
            variable: variable.to_string(),
            expected: expected.filter(|x| x.is_finite()),
            observed: observed.filter(|x| x.is_finite()),
            verdict: verdict.into(),
        });
    }

    pub fn count_flag(&mut self, flag: QualityFlag) {
        *self.flag_counts.entry(flag).or_default() += 1;
    }

    pub fn flags_total(&self, flag: QualityFlag) -> usize {
        self.flag_counts.get(&flag).copied().unwrap_or(0)
    }

    pub fn find_check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Flag requested by a stage for sample `index`.
#[derive(Debug, Clone, PartialEq)]
pub struct FlagEvent {
    pub index: usize,
    pub flag: QualityFlag,
    pub variable: String,
    pub expected: Option<f64>,
    pub observed: Option<f64>,
}

impl FlagEvent {
    pub fn new(index: usize, flag: QualityFlag, variable: &str) -> Self {
        Self {
            index,
            flag,
            variable: variable.to_string(),
            expected: None,
            observed: None,
        }
    }

    pub fn values(mut self, expected: Option<f64>, observed: Option<f64>) -> Self {
        self.expected = expected;
        self.observed = observed;
        self
    }
}

/// Returns a copy of `ds` with the flags applied, recording one detail per
/// flag in `entry`.
pub fn apply_flags(ds: &VoyageDataset, events: &[FlagEvent], entry: &mut StageEntry) -> VoyageDataset {
    let mut out = ds.clone();
    for ev in events {
        out.flag(ev.index, ev.flag);
        entry.count_flag(ev.flag);
        entry.detail(
            Some(ds.timestamps()[ev.index]),
            &ev.variable,
            ev.expected,
            ev.observed,
            ev.flag.as_str(),
        );
    }
    out
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ProcessingReport {
    pub stages: Vec<StageEntry>,
}

impl ProcessingReport {
    pub fn push(&mut self, entry: StageEntry) {
        self.stages.push(entry);
    }

    pub fn stage(&self, name: &str) -> Option<&StageEntry> {
        self.stages.iter().find(|s| s.stage == name)
    }

    pub fn total_flags(&self, flag: QualityFlag) -> usize {
        self.stages.iter().map(|s| s.flags_total(flag)).sum()
    }

    /// Timestamps that have at least one detail line anywhere in the report.
    pub fn reported_timestamps(&self) -> std::collections::BTreeSet<Timestamp> {
        self.stages
            .iter()
            .flat_map(|s| s.details.iter().filter_map(|d| d.timestamp))
            .collect()
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }

    pub fn from_json(s: &str) -> serde_json::Result<Self> {
        serde_json::from_str(s)
    }

    /// Human-readable rendering, one section per stage.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for stage in &self.stages {
            let _ = writeln!(out, "== {} ==", stage.stage);
            if let Some(reason) = &stage.skipped {
                let _ = writeln!(out, "skipped: {reason}");
            }
            for (flag, n) in &stage.flag_counts {
                let _ = writeln!(out, "flag {flag}: {n}");
            }
            for c in &stage.corrections {
                let _ = writeln!(out, "correction: {c}");
            }
            for c in &stage.checks {
                let verdict = if c.passed { "PASS" } else { "FAIL" };
                let _ = write!(out, "check {} [{verdict}]", c.name);
                for (k, v) in &c.metrics {
                    let _ = write!(out, " {k}={v}");
                }
                if !c.message.is_empty() {
                    let _ = write!(out, " -- {}", c.message);
                }
                out.push('\n');
            }
            for w in &stage.warnings {
                let _ = writeln!(out, "warning: {w}");
            }
            if !stage.details.is_empty() {
                let _ = writeln!(out, "details: {}", stage.details.len());
            }
            out.push('\n');
        }
        out
    }
}

//! Verdicts of individual checks.
//!
//! A [`Report`] is deterministic for a fixed check, field order, budget and
//! seed. Wall-clock time is kept out of the serialized form unless it was
//! explicitly recorded, so that JSON output can be diffed byte for byte.

use std::collections::BTreeMap;
use std::fmt;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::Value;

/// Maximum number of witnesses retained per report; the violation count in
/// `stats` is always exact.
pub const MAX_WITNESSES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    ReportOnly,
    Error,
}

impl Status {
    /// `true` for verdicts that do not fail a run.
    pub fn is_ok(self) -> bool {
        matches!(self, Status::Pass | Status::ReportOnly)
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::ReportOnly => "report_only",
            Status::Error => "error",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub check_id: String,
    pub q: u32,
    pub status: Status,
    pub cases_checked: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub elapsed_ms: Option<u64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub stats: BTreeMap<String, Value>,
    pub witnesses: Vec<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reading_notes: Option<String>,
}

impl Report {
    pub fn error(check_id: impl Into<String>, q: u32, message: impl fmt::Display) -> Self {
        Report {
            check_id: check_id.into(),
            q,
            status: Status::Error,
            cases_checked: 0,
            elapsed_ms: None,
            stats: BTreeMap::new(),
            witnesses: vec![Value::String(message.to_string())],
            reading_notes: None,
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.reading_notes = Some(note.into());
        self
    }

    pub fn with_stat(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.stats.insert(key.to_string(), value.into());
        self
    }

    pub fn stat_u64(&self, key: &str) -> Option<u64> {
        self.stats.get(key).and_then(Value::as_u64)
    }

    pub fn is_pass(&self) -> bool {
        self.status == Status::Pass
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:<6} q={:<3} {:<11} cases={}",
            self.check_id, self.q, self.status, self.cases_checked
        )?;
        if let Some(ms) = self.elapsed_ms {
            write!(f, " {ms}ms")?;
        }
        for (k, v) in &self.stats {
            write!(f, " {k}={v}")?;
        }
        if let Some(note) = &self.reading_notes {
            write!(f, "\n    note: {note}")?;
        }
        for w in &self.witnesses {
            write!(f, "\n    witness: {w}")?;
        }
        Ok(())
    }
}

/// Accumulates cases and counterexamples during a sweep.
#[derive(Debug)]
pub struct Tally {
    check_id: String,
    q: u32,
    cases: u64,
    violations: u64,
    witnesses: Vec<Value>,
    stats: BTreeMap<String, Value>,
    started: Instant,
}

impl Tally {
    pub fn new(check_id: impl Into<String>, q: u32) -> Self {
        Tally {
            check_id: check_id.into(),
            q,
            cases: 0,
            violations: 0,
            witnesses: Vec::new(),
            stats: BTreeMap::new(),
            started: Instant::now(),
        }
    }

    /// Records one case; the witness closure runs only on failure.
    #[inline]
    pub fn check<F: FnOnce() -> Value>(&mut self, ok: bool, witness: F) -> bool {
        self.cases += 1;
        if !ok {
            self.fail(witness());
        }
        ok
    }

    pub fn fail(&mut self, witness: Value) {
        self.violations += 1;
        if self.witnesses.len() < MAX_WITNESSES {
            self.witnesses.push(witness);
        }
    }

    pub fn add_cases(&mut self, n: u64) {
        self.cases += n;
    }

    pub fn stat(&mut self, key: &str, value: impl Into<Value>) {
        self.stats.insert(key.to_string(), value.into());
    }

    pub fn violations(&self) -> u64 {
        self.violations
    }

    pub fn cases(&self) -> u64 {
        self.cases
    }

    fn build(mut self, status: Status) -> Report {
        self.stats
            .insert("violations".to_string(), Value::from(self.violations));
        Report {
            check_id: self.check_id,
            q: self.q,
            status,
            cases_checked: self.cases,
            elapsed_ms: None,
            stats: self.stats,
            witnesses: self.witnesses,
            reading_notes: None,
        }
    }

    pub fn finish(self) -> Report {
        let status = if self.violations == 0 {
            Status::Pass
        } else {
            Status::Fail
        };
        self.build(status)
    }

    /// Like [`finish`](Self::finish), but a clean sweep is reported as
    /// `report_only` rather than `pass`.
    pub fn finish_report_only(self) -> Report {
        let status = if self.violations == 0 {
            Status::ReportOnly
        } else {
            Status::Fail
        };
        self.build(status)
    }

    pub fn elapsed_ms(&self) -> u64 {
        self.started.elapsed().as_millis() as u64
    }
}

//! Report tables, pass/fail checks and their CSV form.
//!
//! Every CSV file starts with one comment line
//!
//! ```text
//! # phibench-report v1 command=<name> table=<table> verifies=<anchor>
//! ```
//!
//! followed by a header row whose last column is `verifies`. The column
//! list of each table is fixed; a change bumps the version in the comment
//! line. Floats are written as `{:.12e}` so that equal runs give equal
//! bytes.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use crate::config::Command;

pub const REPORT_VERSION: &str = "v1";

/// Fixed-width scientific notation used for every float in a report.
pub fn num(x: f64) -> String {
    format!("{x:.12e}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: &'static str,
    pub verifies: &'static str,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &'static str, verifies: &'static str, columns: &[&str]) -> Self {
        Table {
            name,
            verifies,
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    /// Like [`Table::new`] with `h_1 .. h_rank` inserted after the first
    /// `at` columns.
    pub fn with_coords(name: &'static str, verifies: &'static str, columns: &[&str], at: usize, rank: usize) -> Self {
        let mut t = Table::new(name, verifies, &columns[..at]);
        t.columns.extend((1..=rank).map(|i| format!("h_{i}")));
        t.columns.extend(columns[at..].iter().map(|c| c.to_string()));
        t
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len(), "table {}", self.name);
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Values of a numeric column.
    pub fn floats(&self, name: &str) -> Vec<f64> {
        let Some(i) = self.column(name) else {
            return Vec::new();
        };
        self.rows.iter().filter_map(|r| r[i].parse().ok()).collect()
    }

    pub fn to_csv(&self, command: &str) -> String {
        let mut out = format!(
            "# phibench-report {REPORT_VERSION} command={command} table={} verifies={}\n",
            self.name, self.verifies
        );
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = self.columns.clone();
        header.push("verifies".into());
        w.write_record(&header).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r.iter().map(String::as_str).chain([self.verifies]))
                .expect("in-memory write");
        }
        out.push_str(&String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields"));
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub verifies: &'static str,
    pub passed: bool,
    /// Some quadrature behind the check missed its error budget.
    pub flagged: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, verifies: &'static str, passed: bool, flagged: bool, detail: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            verifies,
            passed,
            flagged,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Status {
    Pass,
    Flagged,
    Failed,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Pass => 0,
            Status::Failed => 2,
            Status::Flagged => 3,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Flagged => "flagged",
            Status::Failed => "failed",
        }
    }
}

/// Everything one command run produced.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub command: Command,
    /// File stem; differs from the command name inside `all`.
    pub label: String,
    pub tables: Vec<Table>,
    pub checks: Vec<Check>,
    /// Free-form lines for the terminal; not written to disk.
    pub notes: Vec<String>,
}

impl Outcome {
    pub fn new(command: Command) -> Self {
        Outcome {
            command,
            label: command.name().to_string(),
            tables: Vec::new(),
            checks: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn check(&mut self, c: Check) {
        self.checks.push(c);
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    /// A failed check whose quadrature is in budget fails the run. Otherwise
    /// any flag makes the run inconclusive; it never passes.
    pub fn status(&self) -> Status {
        if self.checks.iter().any(|c| !c.passed && !c.flagged) {
            Status::Failed
        } else if self.checks.iter().any(|c| c.flagged) {
            Status::Flagged
        } else {
            Status::Pass
        }
    }

    pub fn summary_table(&self) -> Table {
        let mut t = Table::new("summary", "run-summary", &["check", "anchor", "passed", "flagged", "detail"]);
        for c in &self.checks {
            t.push(vec![
                c.name.clone(),
                c.verifies.to_string(),
                c.passed.to_string(),
                c.flagged.to_string(),
                c.detail.clone(),
            ]);
        }
        t
    }

    fn violations_table(&self) -> Table {
        let mut t = Table::new("violations", "run-summary", &["check", "anchor", "flagged", "detail"]);
        for c in self.checks.iter().filter(|c| !c.passed) {
            t.push(vec![c.name.clone(), c.verifies.to_string(), c.flagged.to_string(), c.detail.clone()]);
        }
        t
    }

    /// Writes `<label>.<table>.csv` for every table, `<label>.summary.csv`
    /// and, when a check failed, `<label>.violations.csv`.
    pub fn write(&self, dir: &Path) -> io::Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        let mut tables: Vec<Table> = self.tables.clone();
        tables.push(self.summary_table());
        if self.checks.iter().any(|c| !c.passed) {
            tables.push(self.violations_table());
        }
        for t in &tables {
            let path = dir.join(format!("{}.{}.csv", self.label, t.name));
            fs::write(&path, t.to_csv(self.command.name()))?;
            written.push(path);
        }
        Ok(written)
    }

    /// Terminal summary, one line per check.
    pub fn render(&self) -> String {
        let mut s = String::new();
        for c in &self.checks {
            let mark = match (c.passed, c.flagged) {
                (true, false) => "ok     ",
                (true, true) => "flagged",
                (false, true) => "FLAGGED",
                (false, false) => "FAIL   ",
            };
            let _ = writeln!(s, "  {mark} {}: {}", c.name, c.detail);
        }
        for n in &self.notes {
            let _ = writeln!(s, "  note    {n}");
        }
        let _ = writeln!(s, "{}: {}", self.label, self.status().name());
        s
    }
}

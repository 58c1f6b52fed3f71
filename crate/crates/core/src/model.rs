//! Domain types shared by every analysis.
//!
//! All values are immutable once built and can be shared freely between
//! worker threads.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, DurationRound, TimeDelta, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One execution of one notebook cell.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellRun {
    /// Capture order, unique within a log.
    pub seq: u64,
    /// UTC start time, millisecond precision.
    pub started_at: DateTime<Utc>,
    /// Exact cell content at execution time. Never normalized at rest.
    pub source: String,
    pub outcome: Outcome,
    /// Kernel execution counter, when the kernel reported one.
    pub execution_count: Option<u64>,
}

impl CellRun {
    /// Builds a successful run. The timestamp is truncated to milliseconds.
    pub fn ok(seq: u64, started_at: DateTime<Utc>, source: impl Into<String>) -> Self {
        CellRun {
            seq,
            started_at: truncate_millis(started_at),
            source: source.into(),
            outcome: Outcome::Ok,
            execution_count: None,
        }
    }

    pub fn failed(
        seq: u64,
        started_at: DateTime<Utc>,
        source: impl Into<String>,
        error: ErrorInfo,
    ) -> Self {
        CellRun {
            outcome: Outcome::Error(error),
            ..CellRun::ok(seq, started_at, source)
        }
    }

    pub fn with_execution_count(mut self, count: u64) -> Self {
        self.execution_count = Some(count);
        self
    }

    pub fn is_error(&self) -> bool {
        matches!(self.outcome, Outcome::Error(_))
    }

    /// Milliseconds since the Unix epoch.
    pub fn millis(&self) -> i64 {
        self.started_at.timestamp_millis()
    }
}

pub(crate) fn truncate_millis(ts: DateTime<Utc>) -> DateTime<Utc> {
    ts.duration_trunc(TimeDelta::milliseconds(1)).unwrap_or(ts)
}

/// Result of a run. Error details are present exactly when the run failed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Ok,
    Error(ErrorInfo),
}

impl Outcome {
    pub fn error(&self) -> Option<&ErrorInfo> {
        match self {
            Outcome::Ok => None,
            Outcome::Error(info) => Some(info),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorInfo {
    /// Exception class name, e.g. `SyntaxError`. Never empty.
    pub ename: String,
    pub evalue: String,
    pub traceback: Option<Vec<String>>,
}

impl ErrorInfo {
    pub fn new(ename: impl Into<String>, evalue: impl Into<String>) -> Self {
        ErrorInfo {
            ename: ename.into(),
            evalue: evalue.into(),
            traceback: None,
        }
    }
}

/// All runs captured for one user's notebook, sorted by `(started_at, seq)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExecutionLog {
    user_id: String,
    runs: Vec<CellRun>,
}

impl ExecutionLog {
    /// Sorts `runs` stably by `(started_at, seq)`. Fails on an empty user id
    /// or a repeated `seq`.
    pub fn new(user_id: impl Into<String>, mut runs: Vec<CellRun>) -> Result<Self> {
        let user_id = user_id.into();
        if user_id.is_empty() {
            return Err(Error::InvalidLog("user id is empty".into()));
        }
        let mut seen = HashSet::with_capacity(runs.len());
        for run in &runs {
            if !seen.insert(run.seq) {
                return Err(Error::InvalidLog(format!("duplicate seq {}", run.seq)));
            }
        }
        runs.sort_by_key(|r| (r.started_at, r.seq));
        Ok(ExecutionLog { user_id, runs })
    }

    pub fn user_id(&self) -> &str {
        &self.user_id
    }

    pub fn runs(&self) -> &[CellRun] {
        &self.runs
    }

    pub fn len(&self) -> usize {
        self.runs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.runs.is_empty()
    }
}

/// Code cells of the submitted notebook, in document order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FinalNotebook {
    pub user_id: String,
    pub code_cells: Vec<String>,
}

/// Dataset column names, case-sensitive, unique.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schema {
    attributes: Vec<String>,
}

impl Schema {
    pub fn new<I, S>(attributes: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for attr in attributes {
            let attr = attr.into();
            if attr.is_empty() {
                return Err(Error::Schema("empty attribute name".into()));
            }
            if !seen.insert(attr.clone()) {
                return Err(Error::DuplicateAttribute(attr));
            }
            out.push(attr);
        }
        Ok(Schema { attributes: out })
    }

    pub fn attributes(&self) -> &[String] {
        &self.attributes
    }

    pub fn position(&self, attribute: &str) -> Option<usize> {
        self.attributes.iter().position(|a| a == attribute)
    }
}

/// Three-way error taxonomy of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ErrorKind {
    NoError,
    FormatError,
    ExecutionError,
}

impl ErrorKind {
    pub const ALL: [ErrorKind; 3] = [
        ErrorKind::NoError,
        ErrorKind::FormatError,
        ErrorKind::ExecutionError,
    ];

    /// Row label used in rendered tables.
    pub fn label(self) -> &'static str {
        match self {
            ErrorKind::NoError => "No Error",
            ErrorKind::FormatError => "Format Error",
            ErrorKind::ExecutionError => "Execution Error",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for ErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Task focus of a run. Declaration order is the tie-break order.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Phase {
    Setup,
    DataLoading,
    Cleaning,
    Visualization,
    FeatureEngineering,
    Modeling,
    Evaluation,
    #[default]
    Other,
}

impl Phase {
    pub const ALL: [Phase; 8] = [
        Phase::Setup,
        Phase::DataLoading,
        Phase::Cleaning,
        Phase::Visualization,
        Phase::FeatureEngineering,
        Phase::Modeling,
        Phase::Evaluation,
        Phase::Other,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Phase::Setup => "Setup",
            Phase::DataLoading => "DataLoading",
            Phase::Cleaning => "Cleaning",
            Phase::Visualization => "Visualization",
            Phase::FeatureEngineering => "FeatureEngineering",
            Phase::Modeling => "Modeling",
            Phase::Evaluation => "Evaluation",
            Phase::Other => "Other",
        }
    }

    /// Lower-case column prefix used in KPI tables, e.g. `data_loading`.
    pub fn column_prefix(self) -> &'static str {
        match self {
            Phase::Setup => "setup",
            Phase::DataLoading => "data_loading",
            Phase::Cleaning => "cleaning",
            Phase::Visualization => "visualization",
            Phase::FeatureEngineering => "feature_engineering",
            Phase::Modeling => "modeling",
            Phase::Evaluation => "evaluation",
            Phase::Other => "other",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Phase {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Phase::ALL
            .into_iter()
            .find(|p| p.name().eq_ignore_ascii_case(s) || p.column_prefix() == s)
            .ok_or_else(|| format!("unknown phase {s:?}"))
    }
}

/// Normal form used to compare cell sources: LF line endings, no trailing
/// whitespace on any line, no leading or trailing blank lines. Interior
/// whitespace, indentation and comments are kept.
pub fn canonicalize_source(source: &str) -> String {
    let unified = source.replace("\r\n", "\n").replace('\r', "\n");
    let lines: Vec<&str> = unified.split('\n').map(str::trim_end).collect();
    let first = lines.iter().position(|l| !l.is_empty());
    let last = lines.iter().rposition(|l| !l.is_empty());
    match (first, last) {
        (Some(first), Some(last)) => lines[first..=last].join("\n"),
        _ => String::new(),
    }
}

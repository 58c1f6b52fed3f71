//! Three-way error taxonomy: no error, format error (the cell failed to
//! parse), execution error (anything raised while running).

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{CellRun, ErrorKind, ExecutionLog, Outcome};
use crate::percent::percent;

pub const DEFAULT_FORMAT_ERRORS: [&str; 3] = ["SyntaxError", "IndentationError", "TabError"];

/// Exception names treated as format errors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FormatErrorNames(BTreeSet<String>);

impl Default for FormatErrorNames {
    fn default() -> Self {
        FormatErrorNames::new(DEFAULT_FORMAT_ERRORS)
    }
}

impl FormatErrorNames {
    pub fn new<I, S>(names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        FormatErrorNames(names.into_iter().map(Into::into).collect())
    }

    pub fn contains(&self, ename: &str) -> bool {
        self.0.contains(ename)
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(String::as_str)
    }
}

/// Classifies with the default format-error names.
pub fn classify_run(run: &CellRun) -> ErrorKind {
    classify_run_with(run, &FormatErrorNames::default())
}

pub fn classify_run_with(run: &CellRun, format_errors: &FormatErrorNames) -> ErrorKind {
    match &run.outcome {
        Outcome::Ok => ErrorKind::NoError,
        Outcome::Error(info) if format_errors.contains(&info.ename) => ErrorKind::FormatError,
        Outcome::Error(_) => ErrorKind::ExecutionError,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ErrorDistribution {
    /// Indexed by `ErrorKind::index()`.
    pub counts: [u64; 3],
    pub total: u64,
    /// Exception names of execution-error runs, most frequent first, ties by
    /// name.
    pub top_enames: Vec<(String, u64)>,
}

impl ErrorDistribution {
    pub fn count(&self, kind: ErrorKind) -> u64 {
        self.counts[kind.index()]
    }

    pub fn pct(&self, kind: ErrorKind) -> f64 {
        percent(self.count(kind), self.total).unwrap_or(0.0)
    }
}

/// Pooled distribution over all runs of all logs.
pub fn error_distribution(
    logs: &[ExecutionLog],
    format_errors: &FormatErrorNames,
) -> Result<ErrorDistribution> {
    let mut counts = [0u64; 3];
    let mut enames: BTreeMap<&str, u64> = BTreeMap::new();
    for run in logs.iter().flat_map(ExecutionLog::runs) {
        let kind = classify_run_with(run, format_errors);
        counts[kind.index()] += 1;
        if kind == ErrorKind::ExecutionError {
            if let Outcome::Error(info) = &run.outcome {
                *enames.entry(info.ename.as_str()).or_default() += 1;
            }
        }
    }
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Err(Error::NoRuns);
    }
    let mut top_enames: Vec<(String, u64)> =
        enames.into_iter().map(|(n, c)| (n.to_string(), c)).collect();
    // BTreeMap order already breaks ties by name; the sort is stable.
    top_enames.sort_by_key(|e| std::cmp::Reverse(e.1));
    Ok(ErrorDistribution {
        counts,
        total,
        top_enames,
    })
}

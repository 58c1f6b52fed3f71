//! Readers for execution logs, final notebooks, schema files and cohort
//! directories.
//!
//! Execution logs are JSON Lines, one object per cell run:
//!
//! ```text
//! {"seq":0,"started_at":"2023-03-01T14:00:00.000Z","source":"import pandas as pd","status":"ok","error":null,"execution_count":1}
//! ```
//!
//! Bad records are reported as diagnostics and skipped so a log truncated by a
//! crashed kernel still loads.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::{DateTime, SecondsFormat, Utc};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::model::{truncate_millis, CellRun, ErrorInfo, ExecutionLog, FinalNotebook, Outcome, Schema};

pub const SCHEMA_FILE: &str = "schema.txt";
pub const LOG_FILE: &str = "log.jsonl";
pub const NOTEBOOK_FILE: &str = "final.ipynb";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IngestDiagnostic {
    pub severity: Severity,
    /// File the diagnostic refers to, relative to the cohort root when loaded
    /// as part of a cohort.
    pub file: Option<String>,
    /// 1-based line number.
    pub line: Option<usize>,
    pub message: String,
}

impl IngestDiagnostic {
    pub fn error(line: Option<usize>, message: impl Into<String>) -> Self {
        IngestDiagnostic {
            severity: Severity::Error,
            file: None,
            line,
            message: message.into(),
        }
    }

    pub fn warning(line: Option<usize>, message: impl Into<String>) -> Self {
        IngestDiagnostic {
            severity: Severity::Warning,
            file: None,
            line,
            message: message.into(),
        }
    }

    pub fn in_file(mut self, file: impl Into<String>) -> Self {
        self.file = Some(file.into());
        self
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for IngestDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let severity = match self.severity {
            Severity::Warning => "warning",
            Severity::Error => "error",
        };
        match (&self.file, self.line) {
            (Some(file), Some(line)) => write!(f, "{file}:{line}: {severity}: {}", self.message),
            (Some(file), None) => write!(f, "{file}: {severity}: {}", self.message),
            (None, Some(line)) => write!(f, "line {line}: {severity}: {}", self.message),
            (None, None) => write!(f, "{severity}: {}", self.message),
        }
    }
}

/// Parses a JSON Lines execution log.
///
/// Malformed lines, records missing a required field and repeated `seq`
/// values produce an error diagnostic and are skipped. Records that are not
/// in `(started_at, seq)` order produce a single warning; the returned log is
/// always sorted. Fails only when `user_id` is empty.
pub fn parse_execution_log(
    bytes: &[u8],
    user_id: &str,
) -> Result<(ExecutionLog, Vec<IngestDiagnostic>)> {
    if user_id.is_empty() {
        return Err(Error::InvalidLog("user id is empty".into()));
    }
    let mut diagnostics = Vec::new();
    let mut runs: Vec<CellRun> = Vec::new();
    let mut seen_seq = std::collections::HashSet::new();
    let mut out_of_order: Option<usize> = None;
    let mut saw_content = false;

    for (idx, raw) in bytes.split(|&b| b == b'\n').enumerate() {
        let line_no = idx + 1;
        let raw = raw.strip_suffix(b"\r").unwrap_or(raw);
        if raw.iter().all(u8::is_ascii_whitespace) {
            continue;
        }
        saw_content = true;
        let text = match std::str::from_utf8(raw) {
            Ok(t) => t,
            Err(e) => {
                diagnostics.push(IngestDiagnostic::error(Some(line_no), format!("invalid UTF-8: {e}")));
                continue;
            }
        };
        let run = match parse_record(text) {
            Ok(run) => run,
            Err(message) => {
                diagnostics.push(IngestDiagnostic::error(Some(line_no), message));
                continue;
            }
        };
        if !seen_seq.insert(run.seq) {
            diagnostics.push(IngestDiagnostic::error(
                Some(line_no),
                format!("duplicate seq {}", run.seq),
            ));
            continue;
        }
        if out_of_order.is_none() {
            if let Some(prev) = runs.last() {
                if (run.started_at, run.seq) < (prev.started_at, prev.seq) {
                    out_of_order = Some(line_no);
                }
            }
        }
        runs.push(run);
    }

    if !saw_content {
        diagnostics.push(IngestDiagnostic::warning(None, "empty log"));
    }
    if let Some(line) = out_of_order {
        diagnostics.push(IngestDiagnostic::warning(
            Some(line),
            "records not in (started_at, seq) order; sorted",
        ));
    }
    diagnostics.sort_by_key(|d| d.line.unwrap_or(0));

    let log = ExecutionLog::new(user_id, runs)?;
    Ok((log, diagnostics))
}

fn parse_record(text: &str) -> std::result::Result<CellRun, String> {
    let value: Value = serde_json::from_str(text).map_err(|e| format!("malformed JSON: {e}"))?;
    let obj = value
        .as_object()
        .ok_or_else(|| "record is not a JSON object".to_string())?;

    let missing: Vec<&str> = ["seq", "started_at", "source", "status"]
        .into_iter()
        .filter(|k| !obj.contains_key(*k))
        .collect();
    if !missing.is_empty() {
        return Err(format!("missing required field(s): {}", missing.join(", ")));
    }

    let seq = obj["seq"]
        .as_u64()
        .ok_or_else(|| "field `seq` must be a nonnegative integer".to_string())?;
    let started_at = obj["started_at"]
        .as_str()
        .ok_or_else(|| "field `started_at` must be a string".to_string())
        .and_then(parse_timestamp)?;
    let source = obj["source"]
        .as_str()
        .ok_or_else(|| "field `source` must be a string".to_string())?
        .to_string();
    let error = match obj.get("error") {
        None | Some(Value::Null) => None,
        Some(Value::Object(e)) => Some(parse_error_info(e)?),
        Some(_) => return Err("field `error` must be an object or null".into()),
    };
    let outcome = match (obj["status"].as_str(), error) {
        (Some("ok"), None) => Outcome::Ok,
        (Some("ok"), Some(_)) => return Err("status \"ok\" with a non-null error".into()),
        (Some("error"), Some(info)) => Outcome::Error(info),
        (Some("error"), None) => return Err("status \"error\" requires a non-null `error`".into()),
        _ => return Err("field `status` must be \"ok\" or \"error\"".into()),
    };
    let execution_count = match obj.get("execution_count") {
        None | Some(Value::Null) => None,
        Some(v) => match v.as_u64() {
            Some(n) if n > 0 => Some(n),
            _ => return Err("field `execution_count` must be a positive integer or null".into()),
        },
    };

    Ok(CellRun {
        seq,
        started_at,
        source,
        outcome,
        execution_count,
    })
}

fn parse_error_info(obj: &Map<String, Value>) -> std::result::Result<ErrorInfo, String> {
    let ename = match obj.get("ename").and_then(Value::as_str) {
        Some(s) if !s.is_empty() => s.to_string(),
        _ => return Err("`error.ename` must be a nonempty string".into()),
    };
    let evalue = match obj.get("evalue") {
        None | Some(Value::Null) => String::new(),
        Some(Value::String(s)) => s.clone(),
        Some(_) => return Err("`error.evalue` must be a string".into()),
    };
    let traceback = match obj.get("traceback") {
        None | Some(Value::Null) => None,
        Some(Value::Array(lines)) => Some(
            lines
                .iter()
                .map(|l| l.as_str().map(str::to_string))
                .collect::<Option<Vec<_>>>()
                .ok_or_else(|| "`error.traceback` must contain only strings".to_string())?,
        ),
        Some(_) => return Err("`error.traceback` must be a list of strings or null".into()),
    };
    Ok(ErrorInfo {
        ename,
        evalue,
        traceback,
    })
}

fn parse_timestamp(s: &str) -> std::result::Result<DateTime<Utc>, String> {
    DateTime::parse_from_rfc3339(s)
        .map(|ts| truncate_millis(ts.with_timezone(&Utc)))
        .map_err(|e| format!("field `started_at` is not an RFC 3339 timestamp: {e}"))
}

/// Wire form of a timestamp: `YYYY-MM-DDTHH:MM:SS.mmmZ`.
pub fn format_timestamp(ts: &DateTime<Utc>) -> String {
    ts.to_rfc3339_opts(SecondsFormat::Millis, true)
}

#[derive(Serialize)]
struct WireRecord<'a> {
    seq: u64,
    started_at: String,
    source: &'a str,
    status: &'static str,
    error: Option<&'a ErrorInfo>,
    execution_count: Option<u64>,
}

/// Serializes one run as a single JSON line (no trailing newline).
pub fn format_record(run: &CellRun) -> String {
    let record = WireRecord {
        seq: run.seq,
        started_at: format_timestamp(&run.started_at),
        source: &run.source,
        status: if run.is_error() { "error" } else { "ok" },
        error: run.outcome.error(),
        execution_count: run.execution_count,
    };
    serde_json::to_string(&record).expect("wire record serializes")
}

/// Serializes a log in the JSON Lines wire format.
pub fn write_execution_log(log: &ExecutionLog) -> String {
    let mut out = String::new();
    for run in log.runs() {
        out.push_str(&format_record(run));
        out.push('\n');
    }
    out
}

/// Reads the code cells of a v4 notebook. Only `cells[].cell_type` and
/// `cells[].source` are consulted.
pub fn parse_final_notebook(bytes: &[u8], user_id: &str) -> Result<FinalNotebook> {
    let value: Value = serde_json::from_slice(bytes)
        .map_err(|e| Error::Notebook(format!("not valid JSON: {e}")))?;
    let obj = value
        .as_object()
        .ok_or_else(|| Error::Notebook("top level is not a JSON object".into()))?;
    let cells = obj
        .get("cells")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::Notebook("missing `cells` array".into()))?;

    let mut code_cells = Vec::new();
    for (i, cell) in cells.iter().enumerate() {
        if cell.get("cell_type").and_then(Value::as_str) != Some("code") {
            continue;
        }
        let source = match cell.get("source") {
            Some(Value::String(s)) => s.clone(),
            Some(Value::Array(parts)) => parts
                .iter()
                .map(Value::as_str)
                .collect::<Option<String>>()
                .ok_or_else(|| Error::Notebook(format!("cell {i}: source array holds a non-string")))?,
            _ => return Err(Error::Notebook(format!("cell {i}: missing or invalid source"))),
        };
        code_cells.push(source);
    }
    Ok(FinalNotebook {
        user_id: user_id.to_string(),
        code_cells,
    })
}

/// One attribute per line; blank lines and `#` comments are ignored.
pub fn parse_schema(bytes: &[u8]) -> Result<Schema> {
    let text = std::str::from_utf8(bytes).map_err(|e| Error::Schema(format!("invalid UTF-8: {e}")))?;
    let attributes = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'));
    Schema::new(attributes)
}

/// Artifacts of one user.
#[derive(Debug, Clone)]
pub struct UserArtifacts {
    pub log: ExecutionLog,
    pub notebook: FinalNotebook,
}

impl UserArtifacts {
    pub fn user_id(&self) -> &str {
        self.log.user_id()
    }
}

#[derive(Debug, Clone)]
pub struct Cohort {
    /// Loaded users in lexicographic `user_id` order.
    pub users: Vec<UserArtifacts>,
    pub schema: Schema,
    pub diagnostics: Vec<IngestDiagnostic>,
}

impl Cohort {
    pub fn has_errors(&self) -> bool {
        self.diagnostics.iter().any(IngestDiagnostic::is_error)
    }
}

pub(crate) fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

/// Loads `log` and `notebook` for one user. File-level failures are fatal;
/// per-record problems in the log come back as diagnostics tagged with
/// `label_dir/log.jsonl`-style names.
pub fn load_user(
    user_id: &str,
    log_path: &Path,
    notebook_path: &Path,
    log_label: &str,
    notebook_label: &str,
) -> Result<(UserArtifacts, Vec<IngestDiagnostic>)> {
    let log_bytes = read_file(log_path)?;
    let nb_bytes = read_file(notebook_path)?;
    let (log, diagnostics) = parse_execution_log(&log_bytes, user_id)?;
    let notebook = parse_final_notebook(&nb_bytes, user_id)
        .map_err(|e| Error::Notebook(format!("{notebook_label}: {e}")))?;
    let diagnostics = diagnostics
        .into_iter()
        .map(|d| d.in_file(log_label))
        .collect();
    Ok((UserArtifacts { log, notebook }, diagnostics))
}

/// Loads a cohort directory: `schema.txt` plus one subdirectory per user
/// holding `log.jsonl` and `final.ipynb`.
///
/// A user whose files are missing or unreadable is skipped with an error
/// diagnostic. Users are loaded on the current rayon pool.
pub fn load_cohort(root: &Path) -> Result<Cohort> {
    let schema = parse_schema(&read_file(&root.join(SCHEMA_FILE))?)?;

    let mut user_dirs: Vec<(String, PathBuf)> = Vec::new();
    let mut diagnostics = Vec::new();
    for entry in fs::read_dir(root).map_err(|e| Error::io(root, e))? {
        let entry = entry.map_err(|e| Error::io(root, e))?;
        let path = entry.path();
        if !path.is_dir() {
            continue;
        }
        match entry.file_name().into_string() {
            Ok(name) if !name.starts_with('.') => user_dirs.push((name, path)),
            Ok(_) => {}
            Err(name) => diagnostics.push(IngestDiagnostic::error(
                None,
                format!("user directory name {name:?} is not UTF-8"),
            )),
        }
    }
    if user_dirs.is_empty() {
        return Err(Error::EmptyCohort);
    }
    user_dirs.sort();

    let loaded: Vec<_> = user_dirs
        .par_iter()
        .map(|(user, dir)| {
            let log_label = format!("{user}/{LOG_FILE}");
            let nb_label = format!("{user}/{NOTEBOOK_FILE}");
            load_user(user, &dir.join(LOG_FILE), &dir.join(NOTEBOOK_FILE), &log_label, &nb_label)
                .map_err(|e| {
                    let message = match &e {
                        Error::Io { path, source } => format!(
                            "{}: {source}; user skipped",
                            path.strip_prefix(root).unwrap_or(path).display()
                        ),
                        other => format!("{other}; user skipped"),
                    };
                    IngestDiagnostic::error(None, message).in_file(user.clone())
                })
        })
        .collect();

    let mut users = Vec::new();
    for result in loaded {
        match result {
            Ok((artifacts, diags)) => {
                users.push(artifacts);
                diagnostics.extend(diags);
            }
            Err(diag) => diagnostics.push(diag),
        }
    }
    Ok(Cohort {
        users,
        schema,
        diagnostics,
    })
}

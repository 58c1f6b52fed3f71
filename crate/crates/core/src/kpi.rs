//! Per-user KPIs: hidden and error rates, active time, time per phase, and
//! which referenced attributes survive into the final notebook.
//!
//! Durations are kept in whole milliseconds so that per-phase time sums to
//! the active time exactly.

use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::errors::classify_run_with;
use crate::matching::{match_runs, MatchFlag, MatchResult};
use crate::model::{ErrorKind, ExecutionLog, FinalNotebook, Phase, Schema};
use crate::percent::fraction;
use crate::phases::{phase_profile, PhaseProfile, PhaseRules};
use crate::references::{user_references, ReferenceMatcher, UserReferences};
use crate::timeline::{check_positive, sessionize, SessionSegmentation, DEFAULT_GAP_MINUTES};

pub const DEFAULT_TAIL_MINUTES: f64 = 1.0;

const MS_PER_MINUTE: f64 = 60_000.0;

/// The tunables every analysis depends on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KpiParams {
    pub gap_minutes: f64,
    pub tail_minutes: f64,
}

impl Default for KpiParams {
    fn default() -> Self {
        KpiParams {
            gap_minutes: DEFAULT_GAP_MINUTES,
            tail_minutes: DEFAULT_TAIL_MINUTES,
        }
    }
}

impl KpiParams {
    pub fn validate(&self) -> Result<()> {
        check_positive("gap threshold", self.gap_minutes)?;
        check_positive("tail minutes", self.tail_minutes)?;
        tail_ms(self.tail_minutes).map(|_| ())
    }
}

fn tail_ms(tail_minutes: f64) -> Result<i64> {
    check_positive("tail minutes", tail_minutes)?;
    let ms = (tail_minutes * MS_PER_MINUTE).round();
    if ms < 1.0 {
        return Err(Error::InvalidParameter(format!(
            "tail minutes {tail_minutes} is below one millisecond"
        )));
    }
    Ok(ms as i64)
}

/// Attributed duration of each run in log order: the gap to the next run of
/// the same session, or the tail for the last run of a session.
pub fn run_durations_ms(segmentation: &SessionSegmentation, tail_minutes: f64) -> Result<Vec<i64>> {
    let tail = tail_ms(tail_minutes)?;
    let offsets = &segmentation.offsets_ms;
    let mut out = Vec::with_capacity(offsets.len());
    for s in &segmentation.sessions {
        for i in s.runs.clone() {
            out.push(if i + 1 < s.runs.end {
                offsets[i + 1] - offsets[i]
            } else {
                tail
            });
        }
    }
    Ok(out)
}

/// Estimated time spent working, in minutes.
pub fn active_time(segmentation: &SessionSegmentation, tail_minutes: f64) -> Result<f64> {
    let total: i64 = run_durations_ms(segmentation, tail_minutes)?.iter().sum();
    Ok(total as f64 / MS_PER_MINUTE)
}

#[derive(Debug, Clone, PartialEq)]
pub struct UserKpis {
    pub user_id: String,
    /// Set when the log has no runs; every other field is then zero.
    pub no_runs: bool,
    pub total_runs: u64,
    pub hidden_runs: u64,
    pub hidden_rate: f64,
    /// Format and execution errors together.
    pub error_runs: u64,
    pub error_rate: f64,
    pub format_error_runs: u64,
    pub format_error_rate: f64,
    pub session_count: usize,
    pub active_ms: i64,
    /// Indexed by `Phase::index()`.
    pub phase_ms: [i64; 8],
    pub features_referenced: Vec<String>,
    pub features_in_final: Vec<String>,
    pub features_hidden_only: Vec<String>,
    pub wasted_reference_share: f64,
}

impl UserKpis {
    pub fn active_minutes(&self) -> f64 {
        self.active_ms as f64 / MS_PER_MINUTE
    }

    pub fn phase_minutes(&self, phase: Phase) -> f64 {
        self.phase_ms[phase.index()] as f64 / MS_PER_MINUTE
    }

    pub fn phase_share(&self, phase: Phase) -> f64 {
        if self.active_ms == 0 {
            0.0
        } else {
            self.phase_ms[phase.index()] as f64 / self.active_ms as f64
        }
    }

    /// Column names of the KPI table, in output order.
    pub fn columns() -> Vec<String> {
        let mut cols: Vec<String> = [
            "user_id",
            "total_runs",
            "hidden_runs",
            "hidden_rate",
            "error_runs",
            "error_rate",
            "format_error_runs",
            "format_error_rate",
            "session_count",
            "active_minutes",
        ]
        .map(String::from)
        .to_vec();
        cols.extend(Phase::ALL.map(|p| format!("{}_minutes", p.column_prefix())));
        cols.extend(Phase::ALL.map(|p| format!("{}_share", p.column_prefix())));
        cols.extend(
            [
                "features_referenced",
                "features_in_final",
                "features_hidden_only",
                "wasted_reference_share",
                "no_runs",
            ]
            .map(String::from),
        );
        cols
    }

    /// JSON object keyed by `columns()`, in the same order, with unrounded
    /// numbers and attribute lists as arrays.
    pub fn to_json(&self) -> Value {
        let mut m = Map::new();
        m.insert("user_id".into(), json!(self.user_id));
        m.insert("total_runs".into(), json!(self.total_runs));
        m.insert("hidden_runs".into(), json!(self.hidden_runs));
        m.insert("hidden_rate".into(), json!(self.hidden_rate));
        m.insert("error_runs".into(), json!(self.error_runs));
        m.insert("error_rate".into(), json!(self.error_rate));
        m.insert("format_error_runs".into(), json!(self.format_error_runs));
        m.insert("format_error_rate".into(), json!(self.format_error_rate));
        m.insert("session_count".into(), json!(self.session_count));
        m.insert("active_minutes".into(), json!(self.active_minutes()));
        for p in Phase::ALL {
            m.insert(format!("{}_minutes", p.column_prefix()), json!(self.phase_minutes(p)));
        }
        for p in Phase::ALL {
            m.insert(format!("{}_share", p.column_prefix()), json!(self.phase_share(p)));
        }
        m.insert("features_referenced".into(), json!(self.features_referenced));
        m.insert("features_in_final".into(), json!(self.features_in_final));
        m.insert("features_hidden_only".into(), json!(self.features_hidden_only));
        m.insert("wasted_reference_share".into(), json!(self.wasted_reference_share));
        m.insert("no_runs".into(), json!(self.no_runs));
        Value::Object(m)
    }
}

/// Upstream results for one user, computed once and shared by the KPI and
/// report stages.
#[derive(Debug, Clone)]
pub struct UserAnalysis {
    pub matches: MatchResult,
    pub error_kinds: Vec<ErrorKind>,
    pub segmentation: SessionSegmentation,
    pub references: UserReferences,
    pub phases: PhaseProfile,
    pub durations_ms: Vec<i64>,
}

pub fn analyze_user(
    log: &ExecutionLog,
    final_notebook: &FinalNotebook,
    schema: &Schema,
    rules: &PhaseRules,
    params: KpiParams,
) -> Result<UserAnalysis> {
    params.validate()?;
    let format_errors = rules.format_errors();
    let segmentation = sessionize(log, params.gap_minutes)?;
    let durations_ms = run_durations_ms(&segmentation, params.tail_minutes)?;
    Ok(UserAnalysis {
        matches: match_runs(log, final_notebook),
        error_kinds: log
            .runs()
            .iter()
            .map(|r| classify_run_with(r, &format_errors))
            .collect(),
        references: user_references(log, &ReferenceMatcher::new(schema)),
        phases: phase_profile(log, &segmentation, rules),
        segmentation,
        durations_ms,
    })
}

/// KPIs derived from an existing analysis.
pub fn kpis_from_analysis(analysis: &UserAnalysis, schema: &Schema) -> UserKpis {
    let total = analysis.matches.total;
    let count = |k: ErrorKind| analysis.error_kinds.iter().filter(|e| **e == k).count() as u64;
    let format_error_runs = count(ErrorKind::FormatError);
    let error_runs = format_error_runs + count(ErrorKind::ExecutionError);
    let rate = |n: u64| fraction(n, total).unwrap_or(0.0);

    let n_attrs = schema.attributes().len();
    let mut referenced = vec![false; n_attrs];
    let mut in_final = vec![false; n_attrs];
    for (set, flag) in analysis.references.per_run.iter().zip(&analysis.matches.flags) {
        for &i in set {
            referenced[i] = true;
            if *flag == MatchFlag::FinalCell {
                in_final[i] = true;
            }
        }
    }
    let names = |pick: &dyn Fn(usize) -> bool| -> Vec<String> {
        (0..n_attrs)
            .filter(|&i| pick(i))
            .map(|i| schema.attributes()[i].clone())
            .collect()
    };
    let features_referenced = names(&|i| referenced[i]);
    let features_in_final = names(&|i| in_final[i]);
    let features_hidden_only = names(&|i| referenced[i] && !in_final[i]);
    let wasted_reference_share =
        features_hidden_only.len() as f64 / features_referenced.len().max(1) as f64;

    UserKpis {
        user_id: analysis.matches.user_id.clone(),
        no_runs: total == 0,
        total_runs: total,
        hidden_runs: analysis.matches.hidden_count,
        hidden_rate: rate(analysis.matches.hidden_count),
        error_runs,
        error_rate: rate(error_runs),
        format_error_runs,
        format_error_rate: rate(format_error_runs),
        session_count: analysis.segmentation.sessions.len(),
        active_ms: analysis.durations_ms.iter().sum(),
        phase_ms: analysis.phases.phase_durations_ms(&analysis.durations_ms),
        features_referenced,
        features_in_final,
        features_hidden_only,
        wasted_reference_share,
    }
}

pub fn compute_user_kpis(
    log: &ExecutionLog,
    final_notebook: &FinalNotebook,
    schema: &Schema,
    rules: &PhaseRules,
    params: KpiParams,
) -> Result<UserKpis> {
    let analysis = analyze_user(log, final_notebook, schema, rules, params)?;
    Ok(kpis_from_analysis(&analysis, schema))
}

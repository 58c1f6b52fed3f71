//! Relative timelines and gap-based session segmentation.
//!
//! Sessions are the unit of work this crate treats as a mini-process: a
//! maximal run of cell executions in which no gap exceeds the threshold.

use std::ops::Range;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::ExecutionLog;

pub const DEFAULT_GAP_MINUTES: f64 = 30.0;

const MS_PER_MINUTE: f64 = 60_000.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimelinePoint {
    pub seq: u64,
    pub offset_minutes: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RelativeTimeline {
    pub user_id: String,
    pub points: Vec<TimelinePoint>,
}

/// Offsets of every run from the first run of the log, in minutes.
pub fn relative_timeline(log: &ExecutionLog) -> RelativeTimeline {
    let offsets = offsets_ms(log);
    RelativeTimeline {
        user_id: log.user_id().to_string(),
        points: log
            .runs()
            .iter()
            .zip(offsets)
            .map(|(run, ms)| TimelinePoint {
                seq: run.seq,
                offset_minutes: ms as f64 / MS_PER_MINUTE,
            })
            .collect(),
    }
}

fn offsets_ms(log: &ExecutionLog) -> Vec<i64> {
    let Some(first) = log.runs().first().map(|r| r.millis()) else {
        return Vec::new();
    };
    log.runs().iter().map(|r| r.millis() - first).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Session {
    pub index: usize,
    /// Positions of this session's runs in the log.
    pub runs: Range<usize>,
    pub span_minutes: f64,
    /// Gap from the previous session's last run; `None` for the first session.
    pub break_before_minutes: Option<f64>,
}

impl Session {
    pub fn len(&self) -> usize {
        self.runs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.runs.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SessionSegmentation {
    pub user_id: String,
    pub gap_threshold_minutes: f64,
    /// Millisecond offset of every run from the first run.
    pub offsets_ms: Vec<i64>,
    pub sessions: Vec<Session>,
}

impl SessionSegmentation {
    pub fn run_count(&self) -> usize {
        self.offsets_ms.len()
    }

    /// Session index of every run, in log order.
    pub fn session_indices(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.run_count());
        for s in &self.sessions {
            out.extend(std::iter::repeat_n(s.index, s.len()));
        }
        out
    }
}

pub(crate) fn check_positive(name: &str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be a positive number, got {value}")))
    }
}

pub(crate) fn gap_minutes(from_ms: i64, to_ms: i64) -> f64 {
    (to_ms - from_ms) as f64 / MS_PER_MINUTE
}

/// Splits the log left to right, opening a new session whenever the gap to
/// the previous run exceeds `gap_threshold_minutes`.
pub fn sessionize(log: &ExecutionLog, gap_threshold_minutes: f64) -> Result<SessionSegmentation> {
    check_positive("gap threshold", gap_threshold_minutes)?;
    let offsets = offsets_ms(log);
    let mut sessions = Vec::new();
    let mut start = 0;
    for i in 1..=offsets.len() {
        let boundary =
            i == offsets.len() || gap_minutes(offsets[i - 1], offsets[i]) > gap_threshold_minutes;
        if boundary {
            sessions.push(Session {
                index: sessions.len(),
                runs: start..i,
                span_minutes: gap_minutes(offsets[start], offsets[i - 1]),
                break_before_minutes: (start > 0).then(|| gap_minutes(offsets[start - 1], offsets[start])),
            });
            start = i;
        }
    }
    Ok(SessionSegmentation {
        user_id: log.user_id().to_string(),
        gap_threshold_minutes,
        offsets_ms: offsets,
        sessions,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UserTimelineStats {
    pub user_id: String,
    pub run_count: usize,
    pub total_span_hours: f64,
    pub session_count: usize,
    pub runs_per_session_min: usize,
    pub runs_per_session_max: usize,
    pub runs_per_session_mean: f64,
}

/// One row per log, in the given order.
pub fn cohort_timeline_stats(
    logs: &[ExecutionLog],
    gap_threshold_minutes: f64,
) -> Result<Vec<UserTimelineStats>> {
    logs.iter()
        .map(|log| {
            let seg = sessionize(log, gap_threshold_minutes)?;
            let sizes: Vec<usize> = seg.sessions.iter().map(Session::len).collect();
            let span_ms = seg.offsets_ms.last().copied().unwrap_or(0);
            Ok(UserTimelineStats {
                user_id: log.user_id().to_string(),
                run_count: log.len(),
                total_span_hours: span_ms as f64 / (60.0 * MS_PER_MINUTE),
                session_count: sizes.len(),
                runs_per_session_min: sizes.iter().copied().min().unwrap_or(0),
                runs_per_session_max: sizes.iter().copied().max().unwrap_or(0),
                runs_per_session_mean: if sizes.is_empty() {
                    0.0
                } else {
                    log.len() as f64 / sizes.len() as f64
                },
            })
        })
        .collect()
}

/// Population variance of the users' total spans, in hours squared.
pub fn span_variance_hours(rows: &[UserTimelineStats]) -> Option<f64> {
    if rows.is_empty() {
        return None;
    }
    let n = rows.len() as f64;
    let mean = rows.iter().map(|r| r.total_span_hours).sum::<f64>() / n;
    Some(rows.iter().map(|r| (r.total_span_hours - mean).powi(2)).sum::<f64>() / n)
}

//! Runs every analysis over a loaded cohort and assembles a [`CohortReport`].

use rayon::prelude::*;

use crate::error::Result;
use crate::errors::error_distribution;
use crate::ingest::{IngestDiagnostic, UserArtifacts};
use crate::kpi::{analyze_user, kpis_from_analysis, KpiParams, UserAnalysis};
use crate::matching::pooled_hidden_distribution;
use crate::model::{ExecutionLog, Schema};
use crate::phases::PhaseRules;
use crate::references::reference_distribution;
use crate::report::{CohortReport, ReportMeta, SessionRow, TimelineRow};
use crate::timeline::{cohort_timeline_stats, relative_timeline};

#[derive(Debug, Clone)]
pub struct AnalysisConfig {
    pub params: KpiParams,
    pub rules: PhaseRules,
    /// How the rules were chosen, echoed into the report metadata.
    pub rules_label: String,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            params: KpiParams::default(),
            rules: PhaseRules::default(),
            rules_label: "default".into(),
        }
    }
}

/// Analyzes every user (in parallel on the current rayon pool) and pools the
/// cohort tables. Users keep the order they are given in.
pub fn analyze_cohort(
    users: &[UserArtifacts],
    schema: &Schema,
    config: &AnalysisConfig,
    diagnostics: Vec<IngestDiagnostic>,
) -> Result<CohortReport> {
    config.params.validate()?;
    let analyses: Vec<UserAnalysis> = users
        .par_iter()
        .map(|u| analyze_user(&u.log, &u.notebook, schema, &config.rules, config.params))
        .collect::<Result<_>>()?;
    let logs: Vec<ExecutionLog> = users.iter().map(|u| u.log.clone()).collect();
    let total_runs: u64 = logs.iter().map(|l| l.len() as u64).sum();

    let matches: Vec<_> = analyses.iter().map(|a| a.matches.clone()).collect();
    let hidden = pooled_hidden_distribution(&matches).ok();
    let errors = error_distribution(&logs, &config.rules.format_errors()).ok();
    let references = reference_distribution(&logs, schema).ok().map(|r| r.shares);

    let mut timeline = Vec::new();
    let mut sessions = Vec::new();
    for (log, analysis) in logs.iter().zip(&analyses) {
        let session_of = analysis.segmentation.session_indices();
        for (point, session_index) in relative_timeline(log).points.iter().zip(session_of) {
            timeline.push(TimelineRow {
                user_id: log.user_id().to_string(),
                seq: point.seq,
                offset_minutes: point.offset_minutes,
                session_index,
            });
        }
        for (s, phase) in analysis.segmentation.sessions.iter().zip(&analysis.phases.session_phases) {
            sessions.push(SessionRow {
                user_id: log.user_id().to_string(),
                index: s.index,
                runs: s.len(),
                span_minutes: s.span_minutes,
                break_before_minutes: s.break_before_minutes,
                dominant_phase: *phase,
            });
        }
    }

    let kpis = analyses.iter().map(|a| kpis_from_analysis(a, schema)).collect();
    let timeline_stats = cohort_timeline_stats(&logs, config.params.gap_minutes)?;

    let mut notes = Vec::new();
    if total_runs == 0 {
        notes.push("no runs".to_string());
    }
    let format_errors = config.rules.format_errors();
    let meta = ReportMeta {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        gap_minutes: config.params.gap_minutes,
        tail_minutes: config.params.tail_minutes,
        rules: config.rules_label.clone(),
        format_errors: format_errors.iter().map(str::to_string).collect(),
        users: users.iter().map(|u| u.user_id().to_string()).collect(),
        total_runs,
        diagnostics,
        notes,
    };

    Ok(CohortReport {
        meta,
        hidden,
        errors,
        references,
        timeline,
        sessions,
        timeline_stats,
        kpis,
    })
}

//! Rendering of cohort results: Markdown report, CSV and JSON tables, and
//! two self-contained SVG figures.
//!
//! Every renderer is a pure function of the [`CohortReport`]; identical
//! inputs give byte-identical output.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::errors::ErrorDistribution;
use crate::ingest::{IngestDiagnostic, Severity};
use crate::kpi::UserKpis;
use crate::matching::HiddenDistribution;
use crate::model::{ErrorKind, Phase};
use crate::percent::format_ratio_percent;
use crate::references::AttributeShare;
use crate::timeline::UserTimelineStats;

pub const HIDDEN_LABEL: &str = "Hidden Cells";
pub const FINAL_LABEL: &str = "Final Notebook Cells";
const PCT_HEADER: &str = "Percentage of Logs (%)";

pub const CANVAS_WIDTH: u32 = 800;
pub const CANVAS_HEIGHT: u32 = 400;

#[derive(Debug, Clone, PartialEq)]
pub struct TimelineRow {
    pub user_id: String,
    pub seq: u64,
    pub offset_minutes: f64,
    pub session_index: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionRow {
    pub user_id: String,
    pub index: usize,
    pub runs: usize,
    pub span_minutes: f64,
    pub break_before_minutes: Option<f64>,
    pub dominant_phase: Phase,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportMeta {
    pub tool: String,
    pub version: String,
    pub gap_minutes: f64,
    pub tail_minutes: f64,
    pub rules: String,
    pub format_errors: Vec<String>,
    pub users: Vec<String>,
    pub total_runs: u64,
    pub diagnostics: Vec<IngestDiagnostic>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CohortReport {
    pub meta: ReportMeta,
    /// Absent when the cohort has no runs.
    pub hidden: Option<HiddenDistribution>,
    pub errors: Option<ErrorDistribution>,
    pub references: Option<Vec<AttributeShare>>,
    pub timeline: Vec<TimelineRow>,
    pub sessions: Vec<SessionRow>,
    pub timeline_stats: Vec<UserTimelineStats>,
    pub kpis: Vec<UserKpis>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableFormat {
    Markdown,
    Csv,
    Json,
}

impl FromStr for TableFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "md" | "markdown" => Ok(TableFormat::Markdown),
            "csv" => Ok(TableFormat::Csv),
            "json" => Ok(TableFormat::Json),
            other => Err(format!("unknown format {other:?} (expected md, csv or json)")),
        }
    }
}

/// Fixed-point rendering for non-percentage numbers in tables.
fn fixed(value: f64) -> String {
    format!("{value:.4}")
}

fn csv_field(field: &str) -> String {
    if field.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

fn md_cell(field: &str) -> String {
    field.replace('|', "\\|").replace('\n', " ")
}

fn hidden_rows(h: &HiddenDistribution) -> [(&'static str, u64, String); 2] {
    [
        (HIDDEN_LABEL, h.hidden, format_ratio_percent(h.hidden, h.total)),
        (FINAL_LABEL, h.final_cells, format_ratio_percent(h.final_cells, h.total)),
    ]
}

fn error_rows(e: &ErrorDistribution) -> Vec<(&'static str, u64, String)> {
    ErrorKind::ALL
        .iter()
        .map(|k| (k.label(), e.count(*k), format_ratio_percent(e.count(*k), e.total)))
        .collect()
}

pub fn hidden_csv(h: &HiddenDistribution) -> String {
    let mut out = String::from("label,runs,pct\n");
    for (label, runs, pct) in hidden_rows(h) {
        let _ = writeln!(out, "{label},{runs},{pct}");
    }
    out
}

pub fn errors_csv(e: &ErrorDistribution) -> String {
    let mut out = String::from("label,runs,pct\n");
    for (label, runs, pct) in error_rows(e) {
        let _ = writeln!(out, "{label},{runs},{pct}");
    }
    out
}

pub fn timeline_csv(rows: &[TimelineRow]) -> String {
    let mut out = String::from("user_id,seq,offset_minutes,session_index\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            csv_field(&r.user_id),
            r.seq,
            fixed(r.offset_minutes),
            r.session_index
        );
    }
    out
}

pub fn references_csv(shares: &[AttributeShare]) -> String {
    let mut out = String::from("attribute,runs_referencing,total_runs,pct\n");
    for s in shares {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            csv_field(&s.attribute),
            s.runs_referencing,
            s.total_runs,
            format_ratio_percent(s.runs_referencing, s.total_runs)
        );
    }
    out
}

pub fn kpis_csv(kpis: &[UserKpis]) -> String {
    let columns = UserKpis::columns();
    let mut out = columns.join(",");
    out.push('\n');
    for k in kpis {
        let json = k.to_json();
        let fields: Vec<String> = columns
            .iter()
            .map(|c| match &json[c.as_str()] {
                Value::String(s) => csv_field(s),
                Value::Bool(b) => b.to_string(),
                Value::Number(n) if n.is_f64() => fixed(n.as_f64().unwrap_or_default()),
                Value::Number(n) => n.to_string(),
                Value::Array(items) => csv_field(
                    &items
                        .iter()
                        .filter_map(Value::as_str)
                        .collect::<Vec<_>>()
                        .join(";"),
                ),
                other => other.to_string(),
            })
            .collect();
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

pub fn kpis_json(kpis: &[UserKpis]) -> Result<String> {
    let rows: Vec<Value> = kpis.iter().map(UserKpis::to_json).collect();
    Ok(serde_json::to_string_pretty(&rows)? + "\n")
}

pub fn meta_json(meta: &ReportMeta) -> Result<String> {
    let warnings = meta
        .diagnostics
        .iter()
        .filter(|d| d.severity == Severity::Warning)
        .count();
    let value = json!({
        "tool": meta.tool,
        "version": meta.version,
        "parameters": {
            "gap_minutes": meta.gap_minutes,
            "tail_minutes": meta.tail_minutes,
            "rules": meta.rules,
            "format_errors": meta.format_errors,
        },
        "users": meta.users,
        "total_runs": meta.total_runs,
        "diagnostics": {
            "warnings": warnings,
            "errors": meta.diagnostics.len() - warnings,
            "messages": meta.diagnostics.iter().map(ToString::to_string).collect::<Vec<_>>(),
        },
        "notes": meta.notes,
    });
    Ok(serde_json::to_string_pretty(&value)? + "\n")
}

fn md_pct_table(out: &mut String, rows: &[(&str, u64, String)]) {
    let _ = writeln!(out, "|  | {PCT_HEADER} |");
    out.push_str("|---|---:|\n");
    for (label, _, pct) in rows {
        let _ = writeln!(out, "| {label} | {pct} |");
    }
}

fn markdown(report: &CohortReport) -> String {
    let meta = &report.meta;
    let mut out = String::from("# Notebook workflow report\n\n");
    let _ = writeln!(out, "- Users: {} ({})", meta.users.len(), meta.users.join(", "));
    let _ = writeln!(out, "- Cell runs: {}", meta.total_runs);
    let _ = writeln!(out, "- Session gap threshold: {} minutes", meta.gap_minutes);
    let _ = writeln!(out, "- Tail per session: {} minutes", meta.tail_minutes);
    let _ = writeln!(out, "- Phase rules: {}", meta.rules);
    for note in &meta.notes {
        let _ = writeln!(out, "- Note: {note}");
    }

    if let Some(h) = &report.hidden {
        out.push_str("\n## Cell runs missing from the final notebook\n\n");
        md_pct_table(&mut out, &hidden_rows(h));
    }
    if let Some(e) = &report.errors {
        out.push_str("\n## Errors in cell runs\n\n");
        md_pct_table(&mut out, &error_rows(e));
        if !e.top_enames.is_empty() {
            out.push_str("\n| Exception | Runs |\n|---|---:|\n");
            for (name, count) in &e.top_enames {
                let _ = writeln!(out, "| {} | {count} |", md_cell(name));
            }
        }
    }
    if let Some(shares) = &report.references {
        out.push_str("\n## Column attribute references\n\n");
        out.push_str("| Attribute | Runs | Percentage of Runs (%) |\n|---|---:|---:|\n");
        for s in shares {
            let _ = writeln!(
                out,
                "| {} | {} | {} |",
                md_cell(&s.attribute),
                s.runs_referencing,
                format_ratio_percent(s.runs_referencing, s.total_runs)
            );
        }
    }
    if !report.timeline_stats.is_empty() {
        out.push_str("\n## Timeline\n\n");
        out.push_str("| User | Runs | Span (h) | Sessions | Runs per session (min/mean/max) |\n");
        out.push_str("|---|---:|---:|---:|---|\n");
        for s in &report.timeline_stats {
            let _ = writeln!(
                out,
                "| {} | {} | {:.2} | {} | {}/{:.2}/{} |",
                md_cell(&s.user_id),
                s.run_count,
                s.total_span_hours,
                s.session_count,
                s.runs_per_session_min,
                s.runs_per_session_mean,
                s.runs_per_session_max
            );
        }
    }
    if !report.sessions.is_empty() {
        out.push_str("\n## Sessions\n\n");
        out.push_str("| User | Session | Runs | Span (min) | Break before (min) | Dominant phase |\n");
        out.push_str("|---|---:|---:|---:|---:|---|\n");
        for s in &report.sessions {
            let brk = s
                .break_before_minutes
                .map_or_else(|| "-".to_string(), |b| format!("{b:.2}"));
            let _ = writeln!(
                out,
                "| {} | {} | {} | {:.2} | {brk} | {} |",
                md_cell(&s.user_id),
                s.index,
                s.runs,
                s.span_minutes,
                s.dominant_phase
            );
        }
    }
    if !report.kpis.is_empty() {
        out.push_str("\n## KPIs\n\n");
        out.push_str("| User | Runs | Hidden rate | Error rate | Format error rate | Sessions | Active min | Wasted reference share |\n");
        out.push_str("|---|---:|---:|---:|---:|---:|---:|---:|\n");
        for k in &report.kpis {
            let _ = writeln!(
                out,
                "| {} | {} | {:.4} | {:.4} | {:.4} | {} | {:.2} | {:.4} |",
                md_cell(&k.user_id),
                k.total_runs,
                k.hidden_rate,
                k.error_rate,
                k.format_error_rate,
                k.session_count,
                k.active_minutes(),
                k.wasted_reference_share
            );
        }
        out.push_str("\n### Active minutes by phase\n\n| User |");
        for p in Phase::ALL {
            let _ = write!(out, " {p} |");
        }
        out.push_str("\n|---|");
        out.push_str(&"---:|".repeat(Phase::ALL.len()));
        out.push('\n');
        for k in &report.kpis {
            let _ = write!(out, "| {} |", md_cell(&k.user_id));
            for p in Phase::ALL {
                let _ = write!(out, " {:.2} |", k.phase_minutes(p));
            }
            out.push('\n');
        }
    }
    if !meta.diagnostics.is_empty() {
        out.push_str("\n## Diagnostics\n\n");
        for d in &meta.diagnostics {
            let _ = writeln!(out, "- {}", md_cell(&d.to_string()));
        }
    }
    out
}

/// Renders the summary tables. Markdown gives the whole report; CSV and JSON
/// give the hidden-cell and error tables.
pub fn render_tables(report: &CohortReport, format: TableFormat) -> Result<Vec<u8>> {
    let mut rows: Vec<(&str, &str, u64, String)> = Vec::new();
    if let Some(h) = &report.hidden {
        rows.extend(hidden_rows(h).into_iter().map(|(l, n, p)| ("hidden", l, n, p)));
    }
    if let Some(e) = &report.errors {
        rows.extend(error_rows(e).into_iter().map(|(l, n, p)| ("errors", l, n, p)));
    }
    let text = match format {
        TableFormat::Markdown => markdown(report),
        TableFormat::Csv => {
            let mut out = String::from("table,label,runs,pct\n");
            for (table, label, runs, pct) in rows {
                let _ = writeln!(out, "{table},{label},{runs},{pct}");
            }
            out
        }
        TableFormat::Json => {
            let table = |name: &str| -> Vec<Value> {
                rows.iter()
                    .filter(|r| r.0 == name)
                    .map(|(_, label, runs, pct)| json!({"label": label, "runs": runs, "pct": pct}))
                    .collect()
            };
            let value = json!({
                "hidden": report.hidden.as_ref().map(|_| table("hidden")),
                "errors": report.errors.as_ref().map(|_| table("errors")),
                "notes": report.meta.notes,
            });
            serde_json::to_string_pretty(&value)? + "\n"
        }
    };
    Ok(text.into_bytes())
}

const PALETTE: [&str; 8] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

fn svg_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn svg_open(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{CANVAS_WIDTH}" height="{CANVAS_HEIGHT}" viewBox="0 0 {CANVAS_WIDTH} {CANVAS_HEIGHT}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(out, "<title>{}</title>", svg_escape(title));
    let _ = writeln!(
        out,
        r##"<rect x="0" y="0" width="{CANVAS_WIDTH}" height="{CANVAS_HEIGHT}" fill="#ffffff"/>"##
    );
}

/// Cell runs against hours since each user's first run, one row per user.
pub fn render_svg_scatter(rows: &[TimelineRow]) -> Result<Vec<u8>> {
    if rows.is_empty() {
        return Err(Error::NothingToPlot);
    }
    let mut users: Vec<&str> = Vec::new();
    for r in rows {
        if !users.contains(&r.user_id.as_str()) {
            users.push(&r.user_id);
        }
    }
    let (left, right, top, bottom) = (110.0, 20.0, 30.0, 50.0);
    let plot_w = f64::from(CANVAS_WIDTH) - left - right;
    let plot_h = f64::from(CANVAS_HEIGHT) - top - bottom;
    let max_hours = rows
        .iter()
        .map(|r| r.offset_minutes / 60.0)
        .fold(0.0f64, f64::max);
    let x_max = if max_hours > 0.0 { max_hours } else { 1.0 };
    let band = plot_h / users.len() as f64;
    let x_of = |hours: f64| left + hours / x_max * plot_w;

    let mut out = String::new();
    svg_open(&mut out, "Cell runs relative to each user's first run");
    let _ = writeln!(
        out,
        r##"<line x1="{left:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#000000"/>"##,
        top + plot_h,
        left + plot_w,
        top + plot_h
    );
    let _ = writeln!(
        out,
        r##"<line x1="{left:.2}" y1="{top:.2}" x2="{left:.2}" y2="{:.2}" stroke="#000000"/>"##,
        top + plot_h
    );
    for i in 0..=5 {
        let hours = x_max * f64::from(i) / 5.0;
        let x = x_of(hours);
        let _ = writeln!(
            out,
            r#"<text class="tick" x="{x:.2}" y="{:.2}" text-anchor="middle">{hours:.1}</text>"#,
            top + plot_h + 15.0
        );
    }
    let _ = writeln!(
        out,
        r#"<text class="axis-label" x="{:.2}" y="{:.2}" text-anchor="middle">Hours since first cell run (h)</text>"#,
        left + plot_w / 2.0,
        f64::from(CANVAS_HEIGHT) - 10.0
    );
    let _ = writeln!(
        out,
        r#"<text class="axis-label" x="15" y="{:.2}" text-anchor="middle" transform="rotate(-90 15 {:.2})">User</text>"#,
        top + plot_h / 2.0,
        top + plot_h / 2.0
    );
    for (i, user) in users.iter().enumerate() {
        let y = top + band * (i as f64 + 0.5);
        let _ = writeln!(
            out,
            r#"<text class="row-label" x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            left - 8.0,
            y + 4.0,
            svg_escape(user)
        );
    }
    for r in rows {
        let i = users.iter().position(|u| *u == r.user_id).unwrap_or(0);
        let y = top + band * (i as f64 + 0.5);
        let _ = writeln!(
            out,
            r#"<circle class="point" cx="{:.2}" cy="{y:.2}" r="3" fill="{}" fill-opacity="0.7"/>"#,
            x_of(r.offset_minutes / 60.0),
            PALETTE[i % PALETTE.len()]
        );
    }
    out.push_str("</svg>\n");
    Ok(out.into_bytes())
}

/// One bar per attribute, highest share first.
pub fn render_svg_bars(shares: &[AttributeShare]) -> Result<Vec<u8>> {
    if shares.is_empty() {
        return Err(Error::NothingToPlot);
    }
    let mut sorted: Vec<&AttributeShare> = shares.iter().collect();
    sorted.sort_by(|a, b| b.pct.total_cmp(&a.pct));
    let (left, right, top, bottom) = (60.0, 20.0, 30.0, 110.0);
    let plot_w = f64::from(CANVAS_WIDTH) - left - right;
    let plot_h = f64::from(CANVAS_HEIGHT) - top - bottom;
    let max_pct = sorted[0].pct;
    let y_max = if max_pct > 0.0 { max_pct } else { 1.0 };
    let slot = plot_w / sorted.len() as f64;
    let bar_w = slot * 0.7;

    let mut out = String::new();
    svg_open(&mut out, "Share of cell runs referencing each column attribute");
    let _ = writeln!(
        out,
        r##"<line x1="{left:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#000000"/>"##,
        top + plot_h,
        left + plot_w,
        top + plot_h
    );
    let _ = writeln!(
        out,
        r##"<line x1="{left:.2}" y1="{top:.2}" x2="{left:.2}" y2="{:.2}" stroke="#000000"/>"##,
        top + plot_h
    );
    for i in 0..=4 {
        let pct = y_max * f64::from(i) / 4.0;
        let y = top + plot_h - pct / y_max * plot_h;
        let _ = writeln!(
            out,
            r#"<text class="tick" x="{:.2}" y="{:.2}" text-anchor="end">{pct:.1}</text>"#,
            left - 6.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        out,
        r#"<text class="axis-label" x="15" y="{:.2}" text-anchor="middle" transform="rotate(-90 15 {:.2})">Cell runs referencing attribute (%)</text>"#,
        top + plot_h / 2.0,
        top + plot_h / 2.0
    );
    for (i, s) in sorted.iter().enumerate() {
        let h = s.pct / y_max * plot_h;
        let x = left + slot * i as f64 + (slot - bar_w) / 2.0;
        let y = top + plot_h - h;
        let _ = writeln!(
            out,
            r##"<rect class="bar" x="{x:.2}" y="{y:.2}" width="{bar_w:.2}" height="{h:.2}" fill="#1f77b4"><title>{}: {}</title></rect>"##,
            svg_escape(&s.attribute),
            format_ratio_percent(s.runs_referencing, s.total_runs)
        );
        let cx = x + bar_w / 2.0;
        let ly = top + plot_h + 10.0;
        let _ = writeln!(
            out,
            r#"<text class="bar-label" x="{cx:.2}" y="{ly:.2}" text-anchor="end" transform="rotate(-45 {cx:.2} {ly:.2})">{}</text>"#,
            svg_escape(&s.attribute)
        );
    }
    out.push_str("</svg>\n");
    Ok(out.into_bytes())
}

pub const REPORT_FILES: [&str; 10] = [
    "report.md",
    "hidden.csv",
    "errors.csv",
    "timeline.csv",
    "references.csv",
    "kpis.csv",
    "kpis.json",
    "fig_timeline.svg",
    "fig_references.svg",
    "meta.json",
];

/// Every output file as `(name, contents)`. Tables and figures that need
/// runs are left out when the cohort has none.
pub fn report_files(report: &CohortReport) -> Result<Vec<(&'static str, Vec<u8>)>> {
    let mut files: Vec<(&'static str, Vec<u8>)> =
        vec![("report.md", render_tables(report, TableFormat::Markdown)?)];
    if let Some(h) = &report.hidden {
        files.push(("hidden.csv", hidden_csv(h).into_bytes()));
    }
    if let Some(e) = &report.errors {
        files.push(("errors.csv", errors_csv(e).into_bytes()));
    }
    files.push(("timeline.csv", timeline_csv(&report.timeline).into_bytes()));
    if let Some(r) = &report.references {
        files.push(("references.csv", references_csv(r).into_bytes()));
    }
    files.push(("kpis.csv", kpis_csv(&report.kpis).into_bytes()));
    files.push(("kpis.json", kpis_json(&report.kpis)?.into_bytes()));
    if !report.timeline.is_empty() {
        files.push(("fig_timeline.svg", render_svg_scatter(&report.timeline)?));
    }
    if let Some(r) = report.references.as_deref().filter(|r| !r.is_empty()) {
        files.push(("fig_references.svg", render_svg_bars(r)?));
    }
    files.push(("meta.json", meta_json(&report.meta)?.into_bytes()));
    Ok(files)
}

/// Writes the report directory, creating it if needed.
pub fn write_report(report: &CohortReport, out_dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut written = Vec::new();
    for (name, bytes) in report_files(report)? {
        let path = out_dir.join(name);
        fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}

//! Task-focus classification from literal code patterns, file-asset
//! detection, and per-session dominant phases.
//!
//! Rules are data (see `default_rules.tsv`): a priority, a phase and a
//! literal pattern. Classification works on raw text, so cells that fail to
//! parse are classified like any other.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::errors::FormatErrorNames;
use crate::model::{ExecutionLog, Phase};
use crate::references::is_ident_byte;
use crate::timeline::SessionSegmentation;

/// The rules file shipped with the crate.
pub const DEFAULT_RULES: &str = include_str!("default_rules.tsv");

const IMPORT_ONLY: &str = "@import_only";
const FORMAT_ERRORS_SECTION: &str = "[format_errors]";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhaseRule {
    pub priority: i64,
    pub phase: Phase,
    pub pattern: String,
}

impl PhaseRule {
    fn matches(&self, source: &str) -> bool {
        if self.pattern == IMPORT_ONLY {
            is_import_only(source)
        } else {
            pattern_occurs(source, &self.pattern)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhaseRules {
    /// Sorted by descending priority.
    rules: Vec<PhaseRule>,
    /// Replacement format-error names, when the file has a
    /// `[format_errors]` section.
    format_errors: Option<FormatErrorNames>,
}

impl Default for PhaseRules {
    fn default() -> Self {
        PhaseRules::parse(DEFAULT_RULES).expect("embedded rules are valid")
    }
}

impl PhaseRules {
    pub fn new(mut rules: Vec<PhaseRule>, format_errors: Option<FormatErrorNames>) -> Result<Self> {
        rules.sort_by_key(|r| std::cmp::Reverse(r.priority));
        if let Some(w) = rules.windows(2).find(|w| w[0].priority == w[1].priority) {
            return Err(Error::Rules {
                line: 0,
                message: format!("duplicate priority {}", w[0].priority),
            });
        }
        Ok(PhaseRules {
            rules,
            format_errors,
        })
    }

    /// Rules that never match: every cell is `Other`.
    pub fn empty() -> Self {
        PhaseRules {
            rules: Vec::new(),
            format_errors: None,
        }
    }

    /// Parses the rules file format: `priority<TAB>phase<TAB>pattern` lines,
    /// `#` comments, and an optional trailing `[format_errors]` section with
    /// one exception name per line.
    pub fn parse(text: &str) -> Result<Self> {
        let mut rules = Vec::new();
        let mut format_errors: Option<Vec<String>> = None;
        let mut seen = std::collections::HashMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim_end_matches('\r');
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            if trimmed == FORMAT_ERRORS_SECTION {
                format_errors = Some(Vec::new());
                continue;
            }
            if let Some(names) = format_errors.as_mut() {
                names.push(trimmed.to_string());
                continue;
            }
            let err = |message: String| Error::Rules {
                line: line_no,
                message,
            };
            let mut fields = line.splitn(3, '\t');
            let (Some(priority), Some(phase), Some(pattern)) = (fields.next(), fields.next(), fields.next())
            else {
                return Err(err("expected priority<TAB>phase<TAB>pattern".into()));
            };
            let priority: i64 = priority
                .trim()
                .parse()
                .map_err(|_| err(format!("invalid priority {priority:?}")))?;
            let phase: Phase = phase.trim().parse().map_err(err)?;
            if pattern.is_empty() {
                return Err(err("empty pattern".into()));
            }
            if let Some(first) = seen.insert(priority, line_no) {
                return Err(err(format!("priority {priority} already used on line {first}")));
            }
            rules.push(PhaseRule {
                priority,
                phase,
                pattern: pattern.to_string(),
            });
        }
        PhaseRules::new(rules, format_errors.map(FormatErrorNames::new))
    }

    /// Renders back to the rules file format.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for r in &self.rules {
            let _ = writeln!(out, "{}\t{}\t{}", r.priority, r.phase, r.pattern);
        }
        if let Some(names) = &self.format_errors {
            out.push_str(FORMAT_ERRORS_SECTION);
            out.push('\n');
            for n in names.iter() {
                out.push_str(n);
                out.push('\n');
            }
        }
        out
    }

    pub fn rules(&self) -> &[PhaseRule] {
        &self.rules
    }

    pub fn format_error_override(&self) -> Option<&FormatErrorNames> {
        self.format_errors.as_ref()
    }

    /// Format-error names to use: the override if present, else the default.
    pub fn format_errors(&self) -> FormatErrorNames {
        self.format_errors.clone().unwrap_or_default()
    }

    fn patterns_for(&self, phase: Phase) -> impl Iterator<Item = &str> {
        self.rules
            .iter()
            .filter(move |r| r.phase == phase && r.pattern != IMPORT_ONLY)
            .map(|r| r.pattern.as_str())
    }
}

/// Pattern occurrence with identifier boundaries enforced only at pattern
/// edges that are identifier characters, so `fit` matches `model.fit(X)` but
/// not `fit_transform`, and `sns.` matches `sns.histplot`.
pub(crate) fn pattern_occurs(source: &str, pattern: &str) -> bool {
    pattern_positions(source, pattern).next().is_some()
}

fn pattern_positions<'a>(source: &'a str, pattern: &'a str) -> impl Iterator<Item = usize> + 'a {
    let bytes = source.as_bytes();
    let pat = pattern.as_bytes();
    let check_left = pat.first().is_some_and(|b| is_ident_byte(*b));
    let check_right = pat.last().is_some_and(|b| is_ident_byte(*b));
    source
        .match_indices(pattern)
        .filter(move |(start, m)| {
            let end = start + m.len();
            let left_ok = !check_left || *start == 0 || !is_ident_byte(bytes[start - 1]);
            let right_ok = !check_right || end == bytes.len() || !is_ident_byte(bytes[end]);
            !pattern.is_empty() && left_ok && right_ok
        })
        .map(|(start, _)| start)
}

/// True for cells whose code lines are all `import` / `from .. import`
/// statements (IPython `%` magics and `!` shell lines are ignored).
fn is_import_only(source: &str) -> bool {
    let mut imports = 0;
    let mut open_parens = 0i32;
    for line in source.lines() {
        let code = line.split('#').next().unwrap_or("").trim();
        if open_parens > 0 {
            open_parens += paren_delta(code);
            continue;
        }
        if code.is_empty() || code.starts_with('%') || code.starts_with('!') {
            continue;
        }
        let is_import = code.starts_with("import ")
            || (code.starts_with("from ") && code.contains(" import "));
        if !is_import {
            return false;
        }
        imports += 1;
        open_parens += paren_delta(code);
    }
    imports > 0
}

fn paren_delta(code: &str) -> i32 {
    code.chars()
        .map(|c| match c {
            '(' => 1,
            ')' => -1,
            _ => 0,
        })
        .sum()
}

/// Phase of the first rule (by descending priority) that matches; `Other`
/// when none does.
pub fn classify_phase(source: &str, rules: &PhaseRules) -> Phase {
    rules
        .rules
        .iter()
        .find(|r| r.matches(source))
        .map_or(Phase::Other, |r| r.phase)
}

/// File paths passed as a string literal first argument to a data-loading
/// pattern of the default rules, e.g. `pd.read_csv("flights_2018.csv")`.
pub fn data_assets(source: &str) -> BTreeSet<String> {
    data_assets_with(source, &PhaseRules::default())
}

pub fn data_assets_with(source: &str, rules: &PhaseRules) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for pattern in rules.patterns_for(Phase::DataLoading) {
        for start in pattern_positions(source, pattern) {
            if let Some(path) = first_string_argument(&source[start + pattern.len()..]) {
                out.insert(path);
            }
        }
    }
    out
}

/// Parses `  ( "literal"` at the start of `rest`, returning the literal.
fn first_string_argument(rest: &str) -> Option<String> {
    let rest = rest.trim_start().strip_prefix('(')?.trim_start();
    let prefix_len = rest
        .bytes()
        .take_while(|b| matches!(b, b'r' | b'R' | b'b' | b'B' | b'u' | b'U' | b'f' | b'F'))
        .count();
    if prefix_len > 2 {
        return None;
    }
    let raw = rest[..prefix_len].contains(['r', 'R']);
    let rest = &rest[prefix_len..];
    let quote = rest.chars().next().filter(|c| *c == '"' || *c == '\'')?;
    let mut value = String::new();
    let mut chars = rest[1..].chars();
    while let Some(c) = chars.next() {
        match c {
            '\\' if !raw => value.push(chars.next()?),
            '\n' => return None,
            c if c == quote => return Some(value),
            c => value.push(c),
        }
    }
    None
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseProfile {
    pub user_id: String,
    /// Phase of each run, in log order.
    pub per_run: Vec<Phase>,
    /// Run counts indexed by `Phase::index()`.
    pub run_counts: [u64; 8],
    /// Modal phase of each session; ties go to the earlier phase.
    pub session_phases: Vec<Phase>,
}

impl PhaseProfile {
    /// Distributes per-run durations (milliseconds, log order) over phases.
    pub fn phase_durations_ms(&self, durations_ms: &[i64]) -> [i64; 8] {
        let mut out = [0i64; 8];
        for (phase, d) in self.per_run.iter().zip(durations_ms) {
            out[phase.index()] += d;
        }
        out
    }
}

/// Labels every run and the dominant phase of every session.
/// `segmentation` must come from the same log.
pub fn phase_profile(
    log: &ExecutionLog,
    segmentation: &SessionSegmentation,
    rules: &PhaseRules,
) -> PhaseProfile {
    let per_run: Vec<Phase> = log
        .runs()
        .iter()
        .map(|r| classify_phase(&r.source, rules))
        .collect();
    let mut run_counts = [0u64; 8];
    for p in &per_run {
        run_counts[p.index()] += 1;
    }
    let session_phases = segmentation
        .sessions
        .iter()
        .map(|s| dominant_phase(&per_run[s.runs.clone()]))
        .collect();
    PhaseProfile {
        user_id: log.user_id().to_string(),
        per_run,
        run_counts,
        session_phases,
    }
}

fn dominant_phase(phases: &[Phase]) -> Phase {
    let mut counts = [0usize; 8];
    for p in phases {
        counts[p.index()] += 1;
    }
    // max_by_key keeps the last maximum, so scan in reverse enumeration order
    Phase::ALL
        .into_iter()
        .rev()
        .max_by_key(|p| counts[p.index()])
        .unwrap_or_default()
}

//! Seeded generators and independent reference implementations shared by the
//! integration tests.

#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::PathBuf;

use chrono::{DateTime, TimeZone, Utc};
use nbtrace::{CellRun, ErrorInfo, ExecutionLog, FinalNotebook};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/golden_cohort")
}

pub fn base_time() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2023, 3, 14, 9, 0, 0).unwrap()
}

const SNIPPETS: &[&str] = &[
    "import pandas as pd",
    "df = pd.read_csv('flights.csv')",
    "df.head()",
    "df['ArrDelay'].hist()",
    "print(\"naïve café ✈\")",
    "x = 1\ny = 2",
    "for i in range(3):\n    print(i)",
    "df.dropna()",
    "model.fit(X, y)",
    "# commentaire: données\n",
    "s = 'tab\\there'",
    "",
];

/// A cell body built from one or two snippets, sometimes with noise that
/// canonicalization removes (CRLF, trailing blanks, surrounding blank lines).
pub fn random_source(rng: &mut impl Rng) -> String {
    let mut s = SNIPPETS.choose(rng).unwrap().to_string();
    if rng.random_bool(0.3) {
        s.push('\n');
        s.push_str(SNIPPETS.choose(rng).unwrap());
    }
    if rng.random_bool(0.2) {
        s = s.replace('\n', "\r\n");
    }
    if rng.random_bool(0.2) {
        s.push_str("  \n\n");
    }
    if rng.random_bool(0.1) {
        s.insert_str(0, "\n \n");
    }
    s
}

fn random_error(rng: &mut impl Rng) -> ErrorInfo {
    let ename = *["SyntaxError", "IndentationError", "NameError", "KeyError", "ValueError"]
        .choose(rng)
        .unwrap();
    let mut info = ErrorInfo::new(ename, "bad thing «here»");
    if rng.random_bool(0.5) {
        info.traceback = Some(vec!["Traceback".into(), format!("{ename}: line 1")]);
    }
    info
}

/// Gap in milliseconds drawn so that values near common thresholds occur
/// often: seconds, a few minutes, exact whole minutes, and long breaks.
pub fn random_gap_ms(rng: &mut impl Rng) -> i64 {
    match rng.random_range(0..5) {
        0 => rng.random_range(0..60_000),
        1 => rng.random_range(60_000..600_000),
        2 => rng.random_range(1..=60) * 60_000,
        3 => rng.random_range(1..=60) * 60_000 + rng.random_range(-1..=1),
        _ => rng.random_range(3_600_000..172_800_000),
    }
}

/// A log of `n` runs; `seq` follows capture order and timestamps never go
/// backwards. Some runs share a timestamp.
pub fn random_log(rng: &mut impl Rng, user: &str, n: usize) -> ExecutionLog {
    let mut t = base_time().timestamp_millis() + rng.random_range(0..1_000_000);
    let mut runs = Vec::with_capacity(n);
    for seq in 0..n as u64 {
        if seq > 0 && !rng.random_bool(0.05) {
            t += random_gap_ms(rng);
        }
        let ts = Utc.timestamp_millis_opt(t).unwrap();
        let source = random_source(rng);
        let mut run = if rng.random_bool(0.25) {
            CellRun::failed(seq, ts, source, random_error(rng))
        } else {
            CellRun::ok(seq, ts, source)
        };
        if rng.random_bool(0.7) {
            run = run.with_execution_count(seq + 1);
        }
        runs.push(run);
    }
    ExecutionLog::new(user, runs).unwrap()
}

/// Line-ending unification, per-line right trim and blank-edge removal,
/// written without sharing code with the library.
pub fn reference_canonical(source: &str) -> String {
    let mut lines = Vec::new();
    let mut current = String::new();
    let mut chars = source.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '\r' => {
                if chars.peek() == Some(&'\n') {
                    chars.next();
                }
                lines.push(std::mem::take(&mut current));
            }
            '\n' => lines.push(std::mem::take(&mut current)),
            c => current.push(c),
        }
    }
    lines.push(current);
    let lines: Vec<String> = lines.into_iter().map(|l| l.trim_end().to_string()).collect();
    let mut lo = 0;
    let mut hi = lines.len();
    while lo < hi && lines[lo].is_empty() {
        lo += 1;
    }
    while hi > lo && lines[hi - 1].is_empty() {
        hi -= 1;
    }
    lines[lo..hi].join("\n")
}

/// Quadratic matcher: a run is hidden when no final cell equals it after
/// canonicalization.
pub fn reference_hidden_flags(log: &ExecutionLog, notebook: &FinalNotebook) -> Vec<bool> {
    log.runs()
        .iter()
        .map(|r| {
            let c = reference_canonical(&r.source);
            !notebook.code_cells.iter().any(|cell| reference_canonical(cell) == c)
        })
        .collect()
}

/// Session boundaries from first principles: run `i > 0` opens a session when
/// `60000 * threshold < gap_ms`. Returns the session index of each run.
pub fn reference_sessions(log: &ExecutionLog, threshold_minutes: f64) -> Vec<usize> {
    let mut out = Vec::new();
    let mut current = 0;
    for (i, r) in log.runs().iter().enumerate() {
        if i > 0 {
            let gap_ms = r.millis() - log.runs()[i - 1].millis();
            if (gap_ms as f64) / 60_000.0 > threshold_minutes {
                current += 1;
            }
        }
        out.push(current);
    }
    out
}

fn ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

/// Character-by-character scan for bounded occurrences of each attribute.
pub fn reference_extract(source: &str, attributes: &[String]) -> BTreeSet<String> {
    let chars: Vec<char> = source.chars().collect();
    let mut found = BTreeSet::new();
    for attr in attributes {
        let needle: Vec<char> = attr.chars().collect();
        if needle.is_empty() || needle.len() > chars.len() {
            continue;
        }
        for start in 0..=chars.len() - needle.len() {
            if chars[start..start + needle.len()] != needle[..] {
                continue;
            }
            let end = start + needle.len();
            let left = start == 0 || !ident_char(chars[start - 1]);
            let right = end == chars.len() || !ident_char(chars[end]);
            if left && right {
                found.insert(attr.clone());
                break;
            }
        }
    }
    found
}

//! Acceptance suite. Runs every criterion and prints one `PASS`/`FAIL` line
//! each; exits non-zero if any criterion fails.

mod common;

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::process::Command;
use std::time::{Duration, Instant};

use nbtrace::errors::{classify_run_with, error_distribution, FormatErrorNames};
use nbtrace::ingest::{parse_execution_log, write_execution_log};
use nbtrace::kpi::{analyze_user, kpis_from_analysis, KpiParams};
use nbtrace::matching::{match_runs, HiddenDistribution, MatchFlag};
use nbtrace::percent::{format_fraction_as_percent, format_percent};
use nbtrace::phases::PhaseRules;
use nbtrace::references::extract_references;
use nbtrace::report::{errors_csv, hidden_csv, render_tables, CohortReport, ReportMeta, TableFormat};
use nbtrace::timeline::sessionize;
use nbtrace::errors::ErrorDistribution;
use nbtrace::{ErrorKind, ExecutionLog, FinalNotebook, Schema};
use rand::seq::IndexedRandom;
use rand::Rng;

const INSTANCES: usize = 200;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn golden_cohort() -> Outcome {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let golden = manifest.join("tests/golden/cohort");
    let out = tempfile::tempdir().map_err(|e| e.to_string())?;
    let start = Instant::now();
    let res = Command::new(env!("CARGO_BIN_EXE_nbtrace"))
        .arg("cohort")
        .arg("--cohort")
        .arg(common::fixture_dir())
        .arg("--out")
        .arg(out.path())
        .env_remove("NBTRACE_RULES")
        .output()
        .map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    ensure(res.status.success(), || format!("exit {:?}", res.status.code()))?;
    let mut compared = 0;
    for entry in std::fs::read_dir(&golden).map_err(|e| e.to_string())? {
        let name = entry.map_err(|e| e.to_string())?.file_name();
        let expected = std::fs::read(golden.join(&name)).map_err(|e| e.to_string())?;
        let actual = std::fs::read(out.path().join(&name))
            .map_err(|e| format!("{}: {e}", name.to_string_lossy()))?;
        ensure(actual == expected, || format!("{} differs", name.to_string_lossy()))?;
        compared += 1;
    }
    ensure(elapsed < Duration::from_secs(1), || format!("took {elapsed:?}"))?;
    Ok(format!("{compared} files byte-identical in {} ms", elapsed.as_millis()))
}

fn table_formatting() -> Outcome {
    for (fraction, text) in [
        (0.3716, "37.16"),
        (0.6284, "62.84"),
        (0.8293, "82.93"),
        (0.0101, "1.01"),
        (0.1606, "16.06"),
    ] {
        let got = format_fraction_as_percent(fraction);
        ensure(got == text, || format!("{fraction} rendered as {got}"))?;
    }
    let report = CohortReport {
        meta: ReportMeta {
            tool: "nbtrace".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            gap_minutes: 30.0,
            tail_minutes: 1.0,
            rules: "default".into(),
            format_errors: vec![],
            users: vec![],
            total_runs: 10_000,
            diagnostics: vec![],
            notes: vec![],
        },
        hidden: Some(HiddenDistribution { hidden: 3716, final_cells: 6284, total: 10_000 }),
        errors: Some(ErrorDistribution {
            counts: [8293, 101, 1606],
            total: 10_000,
            top_enames: vec![],
        }),
        references: None,
        timeline: vec![],
        sessions: vec![],
        timeline_stats: vec![],
        kpis: vec![],
    };
    let md = String::from_utf8(render_tables(&report, TableFormat::Markdown).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    for row in [
        "| Hidden Cells | 37.16 |",
        "| Final Notebook Cells | 62.84 |",
        "| No Error | 82.93 |",
        "| Format Error | 1.01 |",
        "| Execution Error | 16.06 |",
    ] {
        ensure(md.contains(row), || format!("markdown lacks {row:?}"))?;
    }
    let hidden = hidden_csv(report.hidden.as_ref().unwrap());
    ensure(
        hidden == "label,runs,pct\nHidden Cells,3716,37.16\nFinal Notebook Cells,6284,62.84\n",
        || format!("hidden.csv was {hidden:?}"),
    )?;
    let errors = errors_csv(report.errors.as_ref().unwrap());
    ensure(
        errors == "label,runs,pct\nNo Error,8293,82.93\nFormat Error,101,1.01\nExecution Error,1606,16.06\n",
        || format!("errors.csv was {errors:?}"),
    )?;
    Ok("37.16/62.84 and 82.93/1.01/16.06 with row labels".into())
}

fn random_notebook(rng: &mut impl Rng, log: &ExecutionLog, max_cells: usize) -> FinalNotebook {
    let n = rng.random_range(0..=max_cells);
    let mut cells = Vec::with_capacity(n);
    for _ in 0..n {
        let cell = match log.runs().choose(rng) {
            Some(run) if rng.random_bool(0.6) => {
                let mut s = run.source.clone();
                match rng.random_range(0..4) {
                    0 => s.push_str("   \r\n"),
                    1 => s = s.replace('\n', "\r\n"),
                    2 => s.push('x'),
                    _ => {}
                }
                s
            }
            _ => common::random_source(rng),
        };
        cells.push(cell);
    }
    FinalNotebook { user_id: log.user_id().to_string(), code_cells: cells }
}

fn matching_oracle() -> Outcome {
    let mut rng = common::rng(0x5eed_0001);
    let mut runs = 0;
    for i in 0..INSTANCES {
        let n = rng.random_range(0..=100);
        let log = common::random_log(&mut rng, "u", n);
        let nb = random_notebook(&mut rng, &log, 40);
        let result = match_runs(&log, &nb);
        let expected = common::reference_hidden_flags(&log, &nb);
        let got: Vec<bool> = result.flags.iter().map(|f| *f == MatchFlag::HiddenCell).collect();
        ensure(got == expected, || format!("instance {i}: flags differ"))?;
        ensure(result.hidden_count + result.final_count == result.total, || {
            format!("instance {i}: counts do not partition")
        })?;
        runs += n;
    }
    Ok(format!("{INSTANCES} instances, {runs} run flags, 0 discrepancies"))
}

fn sessionization() -> Outcome {
    let mut rng = common::rng(0x5eed_0002);
    let mut sessions_seen = 0;
    for i in 0..INSTANCES {
        let n = rng.random_range(0..=80);
        let log = common::random_log(&mut rng, "u", n);
        let threshold = if rng.random_bool(0.5) {
            rng.random_range(1..=60) as f64
        } else {
            rng.random_range(0.01..120.0)
        };
        let seg = sessionize(&log, threshold).map_err(|e| e.to_string())?;
        let ms: Vec<i64> = log.runs().iter().map(|r| r.millis()).collect();

        // every run in exactly one session, sessions contiguous and in order
        let mut next = 0;
        for (k, s) in seg.sessions.iter().enumerate() {
            ensure(s.index == k && s.runs.start == next && !s.runs.is_empty(), || {
                format!("instance {i}: session {k} breaks the partition")
            })?;
            next = s.runs.end;
        }
        ensure(next == n, || format!("instance {i}: sessions cover {next} of {n} runs"))?;

        // within-session gaps stay at or under the threshold, breaks exceed it
        let idx = seg.session_indices();
        for j in 1..n {
            let gap = (ms[j] - ms[j - 1]) as f64 / 60_000.0;
            let same = idx[j] == idx[j - 1];
            ensure(same == (gap <= threshold), || {
                format!("instance {i}: gap {gap} min at run {j}, threshold {threshold}")
            })?;
        }

        ensure(idx == common::reference_sessions(&log, threshold), || {
            format!("instance {i}: differs from boundary oracle")
        })?;

        let mut thresholds: Vec<f64> = (0..6).map(|_| rng.random_range(0.01..240.0)).collect();
        thresholds.push(threshold);
        thresholds.sort_by(f64::total_cmp);
        let mut prev = usize::MAX;
        for t in thresholds {
            let count = sessionize(&log, t).map_err(|e| e.to_string())?.sessions.len();
            ensure(count <= prev, || format!("instance {i}: count rose to {count} at threshold {t}"))?;
            prev = count;
        }
        sessions_seen += seg.sessions.len();
    }
    Ok(format!("{INSTANCES} logs, {sessions_seen} sessions, 0 violations"))
}

const NESTED: [&str; 12] = [
    "Origin",
    "OriginCityName",
    "OriginState",
    "Dest",
    "DestCityName",
    "Dep",
    "DepDel15",
    "DepDelay",
    "DepDelayMinutes",
    "A",
    "A_B",
    "Arr Delay",
];
const LONG_ONLY: [&str; 6] = ["OriginCityName", "OriginState", "DestCityName", "DepDel15", "DepDelayMinutes", "A_B"];
const PREFIXES: [&str; 4] = ["Origin", "Dest", "Dep", "A"];
const GLUE: [&str; 14] = [
    " ", ".", "[\"", "\"]", "'", "(", ")", "\n", ",", "é", "_", "x", "1", "df",
];
const SAFE_GLUE: [&str; 9] = [" ", ".", "[\"", "\"]", "'", "(", ")", "\n", "é"];

fn random_cell(rng: &mut impl Rng, names: &[&str], glue: &[&str]) -> String {
    let mut s = String::new();
    for _ in 0..rng.random_range(1..12) {
        if rng.random_bool(0.5) {
            s.push_str(names.choose(rng).unwrap());
        }
        s.push_str(glue.choose(rng).unwrap());
    }
    s
}

fn reference_oracle() -> Outcome {
    let schema = Schema::new(NESTED.iter().map(|s| s.to_string())).map_err(|e| e.to_string())?;
    let attrs: Vec<String> = schema.attributes().to_vec();
    let mut rng = common::rng(0x5eed_0003);
    let mut credited = 0;
    for i in 0..INSTANCES {
        let cell = random_cell(&mut rng, &NESTED, &GLUE);
        let got = extract_references(&cell, &schema);
        let expected = common::reference_extract(&cell, &attrs);
        ensure(got == expected, || format!("cell {i} {cell:?}: {got:?} vs {expected:?}"))?;
        credited += got.len();

        // longer names only, separated by non-identifier glue: no prefix credit
        let cell = random_cell(&mut rng, &LONG_ONLY, &SAFE_GLUE);
        let got = extract_references(&cell, &schema);
        let leaked: BTreeSet<_> = PREFIXES.iter().filter(|p| got.contains(**p)).collect();
        ensure(leaked.is_empty(), || format!("cell {i} {cell:?}: prefixes credited {leaked:?}"))?;
        ensure(got == common::reference_extract(&cell, &attrs), || format!("cell {i}: oracle mismatch"))?;
    }
    Ok(format!("{} cells, {credited} references, 0 discrepancies", 2 * INSTANCES))
}

/// Hundredths from a rendered percentage such as `"82.93"`.
fn hundredths(text: &str) -> Result<i64, String> {
    let (whole, frac) = text.split_once('.').ok_or_else(|| format!("bad percentage {text}"))?;
    let whole: i64 = whole.parse().map_err(|_| format!("bad percentage {text}"))?;
    let frac: i64 = frac.parse().map_err(|_| format!("bad percentage {text}"))?;
    Ok(whole * 100 + frac)
}

fn classification() -> Outcome {
    let mut rng = common::rng(0x5eed_0004);
    let rules = PhaseRules::default();
    let names = FormatErrorNames::default();
    let schema = Schema::new(["ArrDelay".to_string()]).map_err(|e| e.to_string())?;
    let mut checked_runs = 0;
    for i in 0..INSTANCES {
        let n = rng.random_range(1..=80);
        let log = common::random_log(&mut rng, "u", n);
        let nb = random_notebook(&mut rng, &log, 10);
        let params = KpiParams {
            gap_minutes: rng.random_range(1.0..60.0),
            tail_minutes: rng.random_range(0.01..5.0),
        };
        let analysis = analyze_user(&log, &nb, &schema, &rules, params).map_err(|e| e.to_string())?;

        ensure(analysis.error_kinds.len() == n && analysis.phases.per_run.len() == n, || {
            format!("instance {i}: not every run labelled")
        })?;
        for (run, kind) in log.runs().iter().zip(&analysis.error_kinds) {
            let expected = match run.outcome.error() {
                None => ErrorKind::NoError,
                Some(e) if names.contains(&e.ename) => ErrorKind::FormatError,
                Some(_) => ErrorKind::ExecutionError,
            };
            ensure(*kind == expected && classify_run_with(run, &names) == expected, || {
                format!("instance {i}: seq {} misclassified", run.seq)
            })?;
        }
        ensure(analysis.phases.run_counts.iter().sum::<u64>() == n as u64, || {
            format!("instance {i}: phase counts do not cover the runs")
        })?;

        let dist = error_distribution(std::slice::from_ref(&log), &names).map_err(|e| e.to_string())?;
        ensure(dist.counts.iter().sum::<u64>() == dist.total, || format!("instance {i}: error counts"))?;
        let mut sum = 0;
        for kind in ErrorKind::ALL {
            sum += hundredths(&format_percent(dist.pct(kind)))?;
        }
        ensure((sum - 10_000).abs() <= 1, || format!("instance {i}: percentages sum to {sum}/100"))?;

        let kpis = kpis_from_analysis(&analysis, &schema);
        ensure(kpis.phase_ms.iter().sum::<i64>() == kpis.active_ms, || {
            format!("instance {i}: phase ms {:?} vs active {}", kpis.phase_ms, kpis.active_ms)
        })?;
        let tail_ms = (params.tail_minutes * 60_000.0).round() as i64;
        let expected_active: i64 = analysis
            .segmentation
            .sessions
            .iter()
            .map(|s| log.runs()[s.runs.end - 1].millis() - log.runs()[s.runs.start].millis() + tail_ms)
            .sum();
        ensure(kpis.active_ms == expected_active, || {
            format!("instance {i}: active {} vs {expected_active}", kpis.active_ms)
        })?;
        checked_runs += n;
    }
    Ok(format!("{INSTANCES} logs, {checked_runs} runs, percentages within 0.01, phase time exact"))
}

fn ingest_round_trip() -> Outcome {
    let mut rng = common::rng(0x5eed_0005);
    let (mut non_ascii, mut errors) = (0, 0);
    for i in 0..INSTANCES {
        let n = rng.random_range(0..=60);
        let log = common::random_log(&mut rng, "u", n);
        let text = write_execution_log(&log);
        let (parsed, diagnostics) = parse_execution_log(text.as_bytes(), "u").map_err(|e| e.to_string())?;
        ensure(!diagnostics.iter().any(|d| d.is_error()), || format!("log {i}: {diagnostics:?}"))?;
        ensure(parsed == log, || format!("log {i}: parsed value differs"))?;
        non_ascii += log.runs().iter().filter(|r| !r.source.is_ascii()).count();
        errors += log.runs().iter().filter(|r| r.is_error()).count();
    }
    ensure(non_ascii > 0 && errors > 0, || "generator produced no non-ASCII or error runs".into())?;
    Ok(format!("{INSTANCES} logs ({non_ascii} non-ASCII runs, {errors} error runs) identical"))
}

fn main() {
    let criteria: [Criterion; 7] = [
        ("golden cohort", golden_cohort),
        ("table formatting", table_formatting),
        ("matching oracle", matching_oracle),
        ("sessionization properties", sessionization),
        ("reference extraction oracle", reference_oracle),
        ("classification totality and partition", classification),
        ("ingest round trip", ingest_round_trip),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        match check() {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL {name}: {why}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

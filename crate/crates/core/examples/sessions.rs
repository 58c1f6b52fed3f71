//! Split a log into work sessions at several gap thresholds.
//!
//! ```bash
//! cargo run --example sessions -- path/to/log.jsonl 10
//! ```

use std::path::PathBuf;

use nbtrace::ingest::parse_execution_log;
use nbtrace::timeline::{sessionize, DEFAULT_GAP_MINUTES};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let path = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/golden_cohort/u1/log.jsonl"));
    let gap: f64 = match args.next() {
        Some(s) => s.parse()?,
        None => DEFAULT_GAP_MINUTES,
    };

    let (log, _) = parse_execution_log(&std::fs::read(&path)?, "example")?;
    let seg = sessionize(&log, gap)?;
    println!("{} runs, {} sessions at a {gap}-minute gap", seg.run_count(), seg.sessions.len());
    for s in &seg.sessions {
        let brk = s.break_before_minutes.map(|m| format!(" after {m:.1} min break")).unwrap_or_default();
        println!("  #{}: runs {:?}, {:.1} min{brk}", s.index, s.runs, s.span_minutes);
    }

    println!("threshold sweep:");
    for t in [1.0, 5.0, 15.0, 30.0, 60.0, 240.0] {
        println!("  {t:>5} min -> {} sessions", sessionize(&log, t)?.sessions.len());
    }
    Ok(())
}

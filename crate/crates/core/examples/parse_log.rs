//! Parse an execution log and print its diagnostics and runs.
//!
//! ```bash
//! cargo run --example parse_log -- path/to/log.jsonl
//! ```

use std::path::PathBuf;

use nbtrace::ingest::parse_execution_log;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args_os()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/golden_cohort/u2/log.jsonl"));
    let bytes = std::fs::read(&path)?;
    let (log, diagnostics) = parse_execution_log(&bytes, "example")?;

    for d in &diagnostics {
        eprintln!("{d}");
    }
    println!("{} runs", log.len());
    for run in log.runs() {
        let first_line = run.source.lines().next().unwrap_or("");
        let status = match run.outcome.error() {
            Some(e) => e.ename.as_str(),
            None => "ok",
        };
        println!("{:>4}  {}  {:<18} {first_line}", run.seq, run.started_at.format("%H:%M:%S%.3f"), status);
    }
    Ok(())
}

//! Full cohort report: tables, figures, KPIs and metadata written to a
//! directory.
//!
//! ```bash
//! cargo run --example cohort_report -- path/to/cohort out/
//! ```

use std::path::PathBuf;

use nbtrace::ingest::load_cohort;
use nbtrace::pipeline::{analyze_cohort, AnalysisConfig};
use nbtrace::report::{render_tables, write_report, TableFormat};

fn main() -> nbtrace::Result<()> {
    let mut args = std::env::args_os().skip(1);
    let root = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/golden_cohort"));
    let out = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("nbtrace-report"));

    let cohort = load_cohort(&root)?;
    let report = analyze_cohort(&cohort.users, &cohort.schema, &AnalysisConfig::default(), cohort.diagnostics)?;
    let md = render_tables(&report, TableFormat::Markdown)?;
    print!("{}", String::from_utf8_lossy(&md));
    for path in write_report(&report, &out)? {
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

//! Dataset columns mentioned in cell source.

use nbtrace::ingest::load_cohort;
use nbtrace::references::{extract_references, reference_distribution};
use nbtrace::Schema;

fn main() -> nbtrace::Result<()> {
    let schema = Schema::new(["Origin", "OriginCityName", "DepDel15", "Distance"].map(String::from))?;
    for src in [
        "df[\"DepDel15\"].mean()",
        "df.OriginCityName.value_counts()",
        "df[['Origin', 'Distance']]",
        "DepDel15_rate = 0.2",
    ] {
        println!("{src:<36} -> {:?}", extract_references(src, &schema));
    }

    let root = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/golden_cohort");
    let cohort = load_cohort(&root)?;
    let logs: Vec<_> = cohort.users.iter().map(|u| u.log.clone()).collect();
    let index = reference_distribution(&logs, &cohort.schema)?;
    println!("\nshare of {} runs referencing each column:", index.total_runs);
    for share in &index.shares {
        println!("  {:<16} {:>3} {:>6.2}%", share.attribute, share.runs_referencing, share.pct);
    }
    Ok(())
}

//! Error taxonomy over a cohort, with a custom set of format errors.

use nbtrace::errors::{error_distribution, FormatErrorNames};
use nbtrace::ingest::load_cohort;
use nbtrace::percent::format_percent;
use nbtrace::ErrorKind;

fn main() -> nbtrace::Result<()> {
    let root = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/golden_cohort");
    let cohort = load_cohort(&root)?;
    let logs: Vec<_> = cohort.users.iter().map(|u| u.log.clone()).collect();

    for (title, names) in [
        ("default", FormatErrorNames::default()),
        ("SyntaxError only", FormatErrorNames::new(["SyntaxError"])),
    ] {
        let dist = error_distribution(&logs, &names)?;
        println!("{title}:");
        for kind in ErrorKind::ALL {
            println!("  {:<16} {:>4} {:>7}", kind.label(), dist.count(kind), format_percent(dist.pct(kind)));
        }
    }

    let dist = error_distribution(&logs, &FormatErrorNames::default())?;
    println!("most frequent exceptions:");
    for (ename, n) in dist.top_enames.iter().take(5) {
        println!("  {ename:<20} {n}");
    }
    Ok(())
}

//! Which logged runs never made it into the final notebook?

use nbtrace::ingest::load_cohort;
use nbtrace::matching::{match_runs, pooled_hidden_distribution, MatchFlag};
use nbtrace::percent::format_percent;

fn main() -> nbtrace::Result<()> {
    let root = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/golden_cohort");
    let cohort = load_cohort(&root)?;

    let mut results = Vec::new();
    for user in &cohort.users {
        let result = match_runs(&user.log, &user.notebook);
        println!(
            "{}: {} of {} runs hidden",
            result.user_id, result.hidden_count, result.total
        );
        for (run, flag) in user.log.runs().iter().zip(&result.flags) {
            if *flag == MatchFlag::HiddenCell {
                println!("    seq {:>3}: {:?}", run.seq, run.source.lines().next().unwrap_or(""));
            }
        }
        results.push(result);
    }

    let pooled = pooled_hidden_distribution(&results)?;
    println!("Hidden Cells          {}", format_percent(pooled.hidden_pct()));
    println!("Final Notebook Cells  {}", format_percent(pooled.final_pct()));
    Ok(())
}

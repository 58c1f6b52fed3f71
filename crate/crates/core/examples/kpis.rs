//! Per-user KPIs as JSON.

use nbtrace::ingest::load_cohort;
use nbtrace::kpi::{compute_user_kpis, KpiParams};
use nbtrace::phases::PhaseRules;
use nbtrace::Phase;

fn main() -> nbtrace::Result<()> {
    let root = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/golden_cohort");
    let cohort = load_cohort(&root)?;
    let rules = PhaseRules::default();
    let params = KpiParams { gap_minutes: 20.0, ..KpiParams::default() };

    for user in &cohort.users {
        let kpis = compute_user_kpis(&user.log, &user.notebook, &cohort.schema, &rules, params)?;
        println!(
            "{}: {:.1} active minutes over {} sessions, {:.0}% hidden",
            kpis.user_id,
            kpis.active_minutes(),
            kpis.session_count,
            kpis.hidden_rate * 100.0
        );
        for phase in Phase::ALL {
            if kpis.phase_ms[phase.index()] > 0 {
                println!("    {:<20} {:>6.1} min", phase.name(), kpis.phase_minutes(phase));
            }
        }
        println!("{}", serde_json::to_string_pretty(&kpis.to_json())?);
    }
    Ok(())
}

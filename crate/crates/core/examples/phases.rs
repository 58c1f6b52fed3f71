//! Label cells with task phases, using the built-in rules and a custom set.

use nbtrace::phases::{classify_phase, data_assets, PhaseRules};

const CELLS: &[&str] = &[
    "import pandas as pd\nfrom sklearn.linear_model import LogisticRegression",
    "df = pd.read_csv('flights.csv')",
    "df = df.dropna(subset=['ArrDelay'])",
    "df['ArrDelay'].hist(bins=50)",
    "X = pd.get_dummies(df[['Origin', 'Dest']])",
    "model = LogisticRegression().fit(X, y)",
    "print(model.score(X_test, y_test))",
    "x = 42",
];

fn main() -> nbtrace::Result<()> {
    let rules = PhaseRules::default();
    for cell in CELLS {
        let first = cell.lines().next().unwrap_or("");
        println!("{:<20} {first}", classify_phase(cell, &rules).name());
    }
    println!("data assets: {:?}", data_assets(CELLS[1]));

    let custom = PhaseRules::parse(
        "# priority\tphase\tpattern\n\
         20\tEvaluation\tprint\n\
         10\tSetup\timport\n",
    )?;
    println!("\nwith custom rules:");
    for cell in CELLS {
        println!("{:<20} {}", classify_phase(cell, &custom).name(), cell.lines().next().unwrap_or(""));
    }
    Ok(())
}

//! Run a small Monte Carlo study and print the paper-style summary table.
//!
//! ```bash
//! cargo run --release --example simulate_scenario
//! ```

use hazdiff::scores::Method;
use hazdiff::simulate::{
    run_monte_carlo, summarize_to_table, MethodSpec, ScenarioSpec, TableFormat,
};

fn main() -> hazdiff::Result<()> {
    let spec = ScenarioSpec { scenario: 1, n: 500, seed: 3 };
    let methods = vec![
        MethodSpec::new("score1s", spec.default_config(Method::Score1Simplified)),
        MethodSpec::new("score2s", spec.default_config(Method::Score2Simplified)),
        MethodSpec::new("regression", spec.default_config(Method::Regression)),
    ];
    let summary = run_monte_carlo(&spec, &methods, 40, 12)?;
    print!("{}", summarize_to_table(&summary, TableFormat::Text));
    println!("\nCSV rendering:\n{}", summarize_to_table(&summary, TableFormat::Csv));
    Ok(())
}

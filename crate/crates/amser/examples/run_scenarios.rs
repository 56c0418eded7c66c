//! Runs every preset scenario of both applications and checks the results
//! against the published expectations.
//!
//! ```bash
//! cargo run --example run_scenarios
//! ```
//!
//! This is the library form of `amser suite`: per scenario it verifies the
//! settled quality labels, the transmitted-volume percentage, the feature
//! reduction factor, and the three cost gains, each within its tolerance.

use amser::config;
use amser::error::Result;
use amser::harness::run_suite;
use amser::models::ModelPool;
use amser::signals::Application;

fn main() -> Result<()> {
    let calibration = config::load_calibration()?;
    for app in [Application::Pain, Application::Stress] {
        let catalog = config::load_catalog(app)?;
        println!("training the {app} pool…");
        let pool = ModelPool::train_default(app, &catalog, 12)?;
        let report = run_suite(app, &pool, &catalog, &calibration, &[0, 1], 6)?;
        for row in &report.rows {
            println!(
                "{app} {}: labels {} | volume {:>6.2} % (exp {:>6.2}) | reduction {} | gains {:.2}/{:.2}/{:.2} | acc {:.2} vs {:.2} | {}",
                row.scenario,
                if row.decisions_match { "ok " } else { "BAD" },
                row.volume_pct.value,
                row.volume_pct.expected,
                row.reduction
                    .map(|r| format!("{:.3}", r.value))
                    .unwrap_or_else(|| "-".into()),
                row.sensor_gain.value,
                row.edge_gain.value,
                row.speedup.value,
                row.adaptive_accuracy,
                row.baseline_accuracy,
                if row.pass { "pass" } else { "FAIL" },
            );
        }
        println!(
            "{app}: {}\n",
            if report.all_pass { "all scenarios pass" } else { "failures present" }
        );
    }
    Ok(())
}

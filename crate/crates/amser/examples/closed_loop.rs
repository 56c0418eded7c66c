//! Plays the most degraded pain preset through the closed loop and prints
//! the per-window story: labels, sensing, model keys, costs.
//!
//! ```bash
//! cargo run --example closed_loop
//! ```
//!
//! Watch the loop adapt: the first window is acquired with everything on
//! and exposes the noise; the decision drops the corrupted heart and
//! muscle channels, prunes the rest, and from the next window on only the
//! reduced sensor set is powered. A shadow baseline runs the full pipeline
//! on the same windows for comparison.

use amser::config;
use amser::error::Result;
use amser::harness::{run_scenario, ScenarioSpec};
use amser::models::ModelPool;
use amser::monitor::QualityLabel;
use amser::signals::Application;

fn main() -> Result<()> {
    let app = Application::Pain;
    let catalog = config::load_catalog(app)?;
    let calibration = config::load_calibration()?;
    println!("training the {app} pool (one model per reachable key)…");
    let pool = ModelPool::train_default(app, &catalog, 12)?;

    let spec = ScenarioSpec::preset(app, "S4")?;
    let report = run_scenario(&spec, &pool, &catalog, &calibration, &[1], 8)?;

    println!("\n w | probe | labels (ECG EMG PPG EDA) | model key                    | pred/truth | sensor J | edge");
    for w in &report.windows {
        let labels: String = app
            .modalities()
            .iter()
            .map(|k| match w.decision.labels[k] {
                QualityLabel::Reliable => " R ",
                QualityLabel::Uncertain => " U ",
                QualityLabel::Noisy => " N ",
            })
            .collect();
        println!(
            "{:>2} | {:>5} | {labels:>24} | {:<28} | {:>4}/{:<5} | {:>8.3} | {:>6.1}",
            w.window_index,
            if w.probe { "yes" } else { "" },
            w.model_key.as_deref().unwrap_or("-"),
            w.predicted_class.map(|c| c.to_string()).unwrap_or_else(|| "-".into()),
            w.truth_class,
            w.cost.sensor_energy,
            w.cost.edge_energy,
        );
    }

    let gains = report.gains.expect("persistent noise has steady windows");
    println!(
        "\nsteady state: volume {:.2} % of baseline, sensor gain {:.2}x, edge gain {:.2}x, speedup {:.2}x",
        gains.volume_pct, gains.sensor_gain, gains.edge_gain, gains.speedup
    );
    println!(
        "accuracy: adaptive {:.3} vs baseline {:.3}",
        report.adaptive_accuracy, report.baseline_accuracy
    );
    Ok(())
}

//! Demonstrates recovery: noise stops mid-run, a probe window notices, and
//! the loop re-enables the sensors it had powered down.
//!
//! ```bash
//! cargo run --example recover
//! ```
//!
//! Disabled sensors are briefly re-powered every fifth window. Probe data
//! never joins fusion — it only updates the quality labels — so the full
//! pipeline resumes one window after the probe, once regular acquisition
//! restarts.

use amser::config;
use amser::error::Result;
use amser::harness::{run_scenario, ScenarioSpec};
use amser::models::ModelPool;
use amser::signals::{Application, ModalityKind};

fn main() -> Result<()> {
    let app = Application::Stress;
    let catalog = config::load_catalog(app)?;
    let calibration = config::load_calibration()?;
    println!("training the {app} pool…");
    let pool = ModelPool::train_default(app, &catalog, 12)?;

    // The harshest preset, but the noise ends after window 6 (the probe at
    // window 5 still sees it; the one at window 10 does not).
    let mut spec = ScenarioSpec::preset(app, "S4")?;
    spec.noise_until_window = Some(7);
    spec.name = "S4-recovering".into();
    let report = run_scenario(&spec, &pool, &catalog, &calibration, &[2], 13)?;

    println!("\n w | probe | ECG powered | ECG label       | model key");
    for w in &report.windows {
        let ecg_label = w
            .assessments
            .get(&ModalityKind::Ecg)
            .map(|a| format!("{:?} ({:.0} dB)", a.label, a.blind_snr_db.unwrap_or(f64::NAN)))
            .unwrap_or_else(|| "not sensed".into());
        println!(
            "{:>2} | {:>5} | {:>11} | {:<15} | {}",
            w.window_index,
            if w.probe { "yes" } else { "" },
            if w.sensed.contains(&ModalityKind::Ecg) { "yes" } else { "no" },
            ecg_label,
            w.model_key.as_deref().unwrap_or("-"),
        );
    }

    let full = report
        .windows
        .iter()
        .find(|w| w.model_key.as_deref() == Some("stress/ECG=F,PPG=F,EDA=F"))
        .expect("the loop recovers to full fusion");
    println!(
        "\nnoise ended at window 7; the probe at window 10 noticed; full fusion resumed at window {}",
        full.window_index
    );
    Ok(())
}

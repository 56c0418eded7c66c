//! Fits the cost calibration from the published targets and walks through
//! what each operating configuration costs per window.
//!
//! ```bash
//! cargo run --example cost_accounting
//! ```
//!
//! The calibration solves a small inverse problem: per-sensor energy
//! budgets and per-model constants are chosen in closed form so that the
//! reference scenarios reproduce their published energy gains and
//! speedups exactly. Residuals are reported rather than assumed.

use amser::config;
use amser::cost::{window_cost, VolumeMode};
use amser::error::Result;
use amser::signals::Application;

fn main() -> Result<()> {
    let (calibration, residuals) = config::fit_all()?;
    for r in &residuals {
        println!("{}: fit max |residual| = {:.3e}", r.application, r.max_abs_residual);
    }

    for app in [Application::Pain, Application::Stress] {
        let catalog = config::load_catalog(app)?;
        let targets = config::load_targets()?;
        let scenarios = config::fit_scenarios(&catalog, targets.for_application(app)?)?;
        let cal = calibration.for_application(app)?;

        println!("\n{app}: per-sensor energy budgets (per 60 s window):");
        for (kind, sensor) in &cal.sensor {
            println!("  {kind:>3}: {:.4}", sensor.sense);
        }

        println!("  scenario | features | sensor | edge   | latency | volume (feature vs raw bytes)");
        let base = window_cost(
            app,
            cal,
            scenarios[0].retained_features,
            &scenarios[0].active,
            Some(&scenarios[0].model_key),
            VolumeMode::Features,
        )?;
        for s in &scenarios {
            let features = window_cost(
                app,
                cal,
                s.retained_features,
                &s.active,
                Some(&s.model_key),
                VolumeMode::Features,
            )?;
            let raw = window_cost(
                app,
                cal,
                s.retained_features,
                &s.active,
                Some(&s.model_key),
                VolumeMode::Raw,
            )?;
            println!(
                "  {:>8} | {:>8} | {:>6.3} | {:>6.1} | {:>7.1} | {:>6} B vs {:>6} B  (gains {:.2}/{:.2}/{:.2})",
                s.name,
                s.retained_features,
                features.sensor_energy,
                features.edge_energy,
                features.latency_ms,
                features.data_volume_bytes,
                raw.data_volume_bytes,
                base.sensor_energy / features.sensor_energy,
                base.edge_energy / features.edge_energy,
                base.latency_ms / features.latency_ms,
            );
        }
    }
    Ok(())
}

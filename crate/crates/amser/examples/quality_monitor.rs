//! Labels windows Reliable / Uncertain / Noisy from blind SNR and
//! plausibility rules, across noise severities and modalities.
//!
//! ```bash
//! cargo run --example quality_monitor
//! ```
//!
//! The monitor never sees the clean signal: it splits the raw window's
//! spectrum into the modality's physiological band versus everything else
//! and uses that ratio as a reference-free SNR estimate. Plausibility
//! rules (heart rate in range, electrodermal activity above the sensor
//! floor) can only downgrade a Reliable verdict to Uncertain.

use amser::config;
use amser::error::Result;
use amser::monitor::{assess, blind_snr};
use amser::noise::{inject_all, NoiseSpec};
use amser::signals::{synth, Application, SensorStatus, SynthParams};

fn main() -> Result<()> {
    let app = Application::Pain;
    let monitor = config::load_monitor_config()?;
    let params = SynthParams {
        heart_rate_bpm: 68.0,
        seed: 23,
        ..SynthParams::default()
    };

    println!("severity sweep (blind SNR in dB -> label):");
    println!("{:>18} {:>12} {:>12} {:>12} {:>12}", "", "ECG", "EMG", "PPG", "EDA");
    let severities: [(&str, Vec<NoiseSpec>); 3] = [
        ("clean", vec![]),
        ("drift @ 10 dB", vec![NoiseSpec::bw(10.0, 1)]),
        (
            "drift+bursts @ 0",
            vec![NoiseSpec::bw(3.0, 2), NoiseSpec::ma(3.0, 3)],
        ),
    ];
    for (label, specs) in &severities {
        let mut row = format!("{label:>18}");
        for &kind in app.modalities() {
            let mut window = synth(kind, &params, &app.sensor_spec(kind))?;
            if !specs.is_empty() {
                window = inject_all(&window, specs)?;
            }
            let assessment = assess(&window, SensorStatus::Attached, &monitor)?;
            row.push_str(&format!(
                " {:>6.1} {:>5}",
                assessment.blind_snr_db.unwrap_or(f64::NAN),
                format!("{:?}", assessment.label).to_lowercase(),
            ));
        }
        println!("{row}");
    }

    // A detached sensor is noisy regardless of its buffer.
    let ecg = synth(
        amser::signals::ModalityKind::Ecg,
        &params,
        &app.sensor_spec(amser::signals::ModalityKind::Ecg),
    )?;
    let detached = assess(&ecg, SensorStatus::Detached, &monitor)?;
    println!(
        "\ndetached sensor: label {:?}, blind SNR {:?}",
        detached.label, detached.blind_snr_db
    );

    // Plausibility rules: an implausibly slow heart downgrades a clean
    // window from reliable to uncertain, with the reason recorded.
    let slow = SynthParams {
        heart_rate_bpm: 34.0,
        ..params
    };
    let window = synth(
        amser::signals::ModalityKind::Ecg,
        &slow,
        &app.sensor_spec(amser::signals::ModalityKind::Ecg),
    )?;
    let flagged = assess(&window, SensorStatus::Attached, &monitor)?;
    println!(
        "34 bpm window: blind SNR {:.1} dB, label {:?}, reason: {}",
        flagged.blind_snr_db.unwrap_or(f64::NAN),
        flagged.label,
        flagged.discrepancy.as_deref().unwrap_or("-"),
    );
    println!("\nraw blind estimate for the clean window: {:.1} dB", blind_snr(&ecg)?);
    Ok(())
}

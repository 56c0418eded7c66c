//! Synthesizes one 60-second window of every modality, round-trips the ECG
//! through CSV, and segments a longer recording.
//!
//! ```bash
//! cargo run --example synth_signals
//! ```
//!
//! Shows the generator side of the simulator: deterministic physiological
//! windows per modality, the `timestamp,ch0[,ch1...]` CSV convention, and
//! how continuous buffers become fixed 60-second windows.

use amser::error::Result;
use amser::signals::{read_csv, segment, synth, write_csv, Application, SynthParams};

fn main() -> Result<()> {
    let app = Application::Pain;
    let params = SynthParams {
        heart_rate_bpm: 72.0,
        hrv_rel: 0.02,
        scr_rate_per_min: 4.0,
        seed: 42,
        ..SynthParams::default()
    };

    println!("one window per modality ({app} sensor set):");
    for &kind in app.modalities() {
        let spec = app.sensor_spec(kind);
        let window = synth(kind, &params, &spec)?;
        let x = window.primary();
        let mean = x.iter().sum::<f64>() / x.len() as f64;
        let rms = (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt();
        println!(
            "  {kind:>3}: {:>3} Hz x {} ch x 60 s = {:>5} samples/ch | mean {mean:>7.3}, rms {rms:>6.3} | {} truth events",
            spec.sample_rate,
            spec.channels,
            x.len(),
            window.truth_event_times.len(),
        );
    }

    // CSV round trip: same bytes conventions the CLI and tooling expect.
    let ecg = synth(
        amser::signals::ModalityKind::Ecg,
        &params,
        &app.sensor_spec(amser::signals::ModalityKind::Ecg),
    )?;
    let mut buffer = Vec::new();
    write_csv(&ecg, &mut buffer)?;
    let (channels, rate) = read_csv(buffer.as_slice())?;
    println!(
        "\ncsv round trip: {} channels at {rate} Hz, first row header `timestamp,ch0,ch1`",
        channels.len()
    );
    assert_eq!(channels.len(), ecg.channels.len());
    assert_eq!(rate, ecg.sample_rate);

    // Segmentation: a 3-minute buffer becomes three windows, remainder
    // dropped.
    let spec = app.sensor_spec(amser::signals::ModalityKind::Eda);
    let long: Vec<Vec<f64>> = (0..spec.channels as usize)
        .map(|_| (0..spec.sample_rate as usize * 200).map(|i| i as f64).collect())
        .collect();
    let (windows, empty) = segment(&long, &spec)?;
    println!("segmented 200 s of electrodermal data into {} windows (empty: {empty})", windows.len());
    assert_eq!(windows.len(), 3);
    Ok(())
}

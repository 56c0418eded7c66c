//! Filters an ECG window, detects R peaks, and derives beat-interval
//! statistics against the generator's ground truth.
//!
//! ```bash
//! cargo run --example detect_peaks
//! ```
//!
//! The detector thresholds at half the 95th percentile per 10-second block
//! and enforces a 250 ms refractory period, so it tracks amplitude drift
//! without chasing noise spikes.

use amser::dsp::{default_fir, detect_peaks, filtfilt, to_rri};
use amser::error::Result;
use amser::signals::{synth, Application, ModalityKind, SynthParams};

fn main() -> Result<()> {
    let app = Application::Stress;
    let spec = app.sensor_spec(ModalityKind::Ecg);
    let params = SynthParams {
        heart_rate_bpm: 75.0,
        hrv_rel: 0.03,
        seed: 11,
        ..SynthParams::default()
    };
    let window = synth(ModalityKind::Ecg, &params, &spec)?;

    let fir = default_fir(ModalityKind::Ecg, spec.sample_rate as f64)?;
    let filtered = filtfilt(&fir, window.primary())?;
    let peaks = detect_peaks(&filtered, spec.sample_rate as f64);
    println!(
        "detected {} peaks; generator placed {} beats",
        peaks.len(),
        window.truth_event_times.len()
    );

    let rri = to_rri(&peaks, spec.sample_rate as f64)?;
    println!("beat intervals over the window:");
    println!("  heart rate  {:>7.2} bpm (truth {:.2})", rri.hr_mean_bpm, params.heart_rate_bpm);
    println!("  mean        {:>7.3} s", rri.mean_s);
    println!("  std         {:>7.3} s", rri.std_s);
    println!("  rmssd       {:>7.3} s", rri.rmssd_s);
    println!("  min..max    {:>7.3} .. {:.3} s (ratio {:.3})", rri.min_s, rri.max_s, rri.ratio);

    // Match detections to truth within a 60 ms tolerance.
    let rate = spec.sample_rate as f64;
    let matched = peaks
        .iter()
        .filter(|&&p| {
            let t = p as f64 / rate;
            window
                .truth_event_times
                .iter()
                .any(|&truth| (truth - t).abs() <= 0.06)
        })
        .count();
    println!(
        "  {matched}/{} detections within 60 ms of a true beat",
        peaks.len()
    );
    Ok(())
}

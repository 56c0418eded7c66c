//! Estimates a Welch power spectrum and reads band powers off it.
//!
//! ```bash
//! cargo run --example welch_psd
//! ```
//!
//! The estimate uses Hann windows with 50 % overlap and removes only the
//! global mean, so slow drift keeps its spectral mass — which is exactly
//! what the quality monitor later relies on to spot baseline wander.

use amser::dsp::psd;
use amser::error::Result;
use amser::noise::{inject, NoiseSpec};
use amser::signals::{synth, Application, ModalityKind, SynthParams};

fn main() -> Result<()> {
    let app = Application::Pain;
    let spec = app.sensor_spec(ModalityKind::Ppg);
    let params = SynthParams {
        heart_rate_bpm: 66.0,
        seed: 3,
        ..SynthParams::default()
    };
    let clean = synth(ModalityKind::Ppg, &params, &spec)?;

    let estimate = psd(clean.primary(), spec.sample_rate as f64)?;
    println!(
        "welch estimate: {} bins, resolution {:.4} Hz, segment {} samples",
        estimate.freqs.len(),
        estimate.df,
        estimate.segment_len
    );

    // The pulse fundamental sits at heart-rate/60 Hz.
    let f0 = params.heart_rate_bpm / 60.0;
    let fundamental = estimate.band_power(f0 - 0.25, f0 + 0.25);
    let total = estimate.total_power();
    println!(
        "pulse fundamental near {f0:.2} Hz carries {:.1} % of total power",
        100.0 * fundamental / total
    );

    // Drift lands below the physiological band and is easy to see.
    let noisy = inject(&clean, &NoiseSpec::bw(6.0, 9))?;
    let corrupted = psd(noisy.primary(), spec.sample_rate as f64)?;
    let sub_hz_clean = estimate.band_power(0.0, 0.45);
    let sub_hz_noisy = corrupted.band_power(0.0, 0.45);
    println!(
        "power below 0.45 Hz: clean {sub_hz_clean:.4}, with 6 dB drift {sub_hz_noisy:.4} ({:.0}x)",
        sub_hz_noisy / sub_hz_clean.max(1e-12)
    );

    // Parseval sanity: the integrated density matches the variance closely.
    let x = clean.primary();
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    let variance = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / x.len() as f64;
    let integral = estimate.total_power();
    println!(
        "integrated density {integral:.5} vs signal variance {variance:.5} ({:+.2} %)",
        100.0 * (integral / variance - 1.0)
    );
    Ok(())
}

//! Noise injection at controlled SNR, and reference-based SNR measurement.
//!
//! Two noise classes are modeled. Baseline wander (BW) is a slow additive
//! drift realized as a sum of 1–3 sub-0.5 Hz sinusoids with random phases.
//! Motion artifacts (MA) are sparse high-amplitude transients realized as
//! windowed chirps 0.5–2 s long; chirps are broadband and defeat simple notch
//! filtering, so downstream control treats them as unrecoverable.
//!
//! Injection scales the noise realization so the measured SNR (clean signal
//! power over injected-noise power) matches the requested target exactly;
//! the blind, reference-free SNR estimate used at runtime lives in the
//! monitoring module.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{AmserError, Result};
use crate::signals::{derive_rng, ModalityKind, SignalWindow};

/// SNR cap applied when the residual (or in-band) power is zero.
pub const SNR_CAP_DB: f64 = 120.0;

/// Noise class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    /// Baseline wander: sub-0.5 Hz additive drift.
    Bw,
    /// Motion artifacts: sparse windowed chirp transients.
    Ma,
}

/// One noise injection request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    /// Desired clean-to-noise power ratio in dB.
    pub target_snr_db: f64,
    /// Transients per minute (MA only).
    #[serde(default = "default_burst_density")]
    pub burst_density: u32,
    /// When set, the noise is scaled to this RMS amplitude instead of to a
    /// target SNR; zero produces no noise at all.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<f64>,
    pub seed: u64,
}

fn default_burst_density() -> u32 {
    4
}

impl NoiseSpec {
    /// Baseline-wander spec at the given target SNR.
    pub fn bw(target_snr_db: f64, seed: u64) -> NoiseSpec {
        NoiseSpec {
            kind: NoiseKind::Bw,
            target_snr_db,
            burst_density: default_burst_density(),
            amplitude: None,
            seed,
        }
    }

    /// Motion-artifact spec at the given target SNR.
    pub fn ma(target_snr_db: f64, seed: u64) -> NoiseSpec {
        NoiseSpec {
            kind: NoiseKind::Ma,
            target_snr_db,
            burst_density: default_burst_density(),
            amplitude: None,
            seed,
        }
    }
}

/// Frequency range swept by MA chirps for one modality, chosen to sit clear
/// of the band edges the blind SNR estimate relies on (apart from ECG, whose
/// chirps deliberately reach into the physiological band so artifacts survive
/// filtering, as real motion artifacts do).
fn chirp_range(kind: ModalityKind) -> (f64, f64) {
    match kind {
        ModalityKind::Ecg => (30.0, 120.0),
        ModalityKind::Emg => (2.0, 16.0),
        ModalityKind::Ppg => (12.0, 28.0),
        ModalityKind::Eda => (1.0, 1.9),
    }
}

/// Burst duration range in seconds for one modality. Slow sensors get longer
/// bursts so each transient spans several samples.
fn burst_duration_range(kind: ModalityKind) -> (f64, f64) {
    match kind {
        ModalityKind::Ecg | ModalityKind::Emg => (0.5, 2.0),
        ModalityKind::Ppg => (0.75, 2.0),
        ModalityKind::Eda => (1.5, 2.0),
    }
}

/// Adds noise to a window, scaled so the measured SNR against the input is
/// within ±0.5 dB of `spec.target_snr_db` (exact up to rounding). The same
/// realization is added to every channel.
pub fn inject(window: &SignalWindow, spec: &NoiseSpec) -> Result<SignalWindow> {
    window.validate()?;
    if spec.amplitude.is_none() && !spec.target_snr_db.is_finite() {
        return Err(AmserError::InvalidParam("target SNR must be finite".into()));
    }

    let n = window.samples_per_channel();
    let rate = window.sample_rate as f64;
    let shape = match spec.kind {
        NoiseKind::Bw => bw_shape(n, rate, spec.seed),
        NoiseKind::Ma => ma_shape(window.kind, n, rate, spec.burst_density, spec.seed),
    };
    let shape_power = mean_square(&shape);

    let scale = if let Some(amp) = spec.amplitude {
        if amp == 0.0 {
            return Ok(window.clone());
        }
        if shape_power == 0.0 {
            return Err(AmserError::DegenerateInput(
                "noise realization has zero power".into(),
            ));
        }
        amp / shape_power.sqrt()
    } else {
        let clean_power = window
            .channels
            .iter()
            .map(|c| mean_square(c))
            .sum::<f64>()
            / window.channels.len() as f64;
        if clean_power == 0.0 {
            return Err(AmserError::DegenerateInput(
                "cannot hit an SNR target on a zero-power window".into(),
            ));
        }
        if shape_power == 0.0 {
            return Err(AmserError::DegenerateInput(
                "noise realization has zero power".into(),
            ));
        }
        let target_noise_power = clean_power / 10f64.powf(spec.target_snr_db / 10.0);
        (target_noise_power / shape_power).sqrt()
    };

    let mut out = window.clone();
    for ch in &mut out.channels {
        for (v, s) in ch.iter_mut().zip(&shape) {
            *v += scale * s;
        }
    }
    Ok(out)
}

/// Injects several noise sources into one window, each scaled against the
/// same clean reference. Two equal-power sources at target T + 3 dB therefore
/// combine to exactly T dB, which is how mixed-noise conditions are built.
pub fn inject_all(window: &SignalWindow, specs: &[NoiseSpec]) -> Result<SignalWindow> {
    let mut out = window.clone();
    for spec in specs {
        let noisy = inject(window, spec)?;
        for (acc, (n, c)) in out
            .channels
            .iter_mut()
            .zip(noisy.channels.iter().zip(&window.channels))
        {
            for (a, (nv, cv)) in acc.iter_mut().zip(n.iter().zip(c)) {
                *a += nv - cv;
            }
        }
    }
    Ok(out)
}

/// Reference-based SNR: `10·log10(P(clean) / P(noisy − clean))` with power as
/// the mean squared value over all channels, capped at ±120 dB.
pub fn measure_snr(clean: &SignalWindow, noisy: &SignalWindow) -> Result<f64> {
    if clean.channels.len() != noisy.channels.len()
        || clean.samples_per_channel() != noisy.samples_per_channel()
    {
        return Err(AmserError::LengthMismatch(
            "clean and noisy windows differ in shape".into(),
        ));
    }
    let mut signal = 0.0;
    let mut residual = 0.0;
    let total = clean.total_samples() as f64;
    for (c, n) in clean.channels.iter().zip(&noisy.channels) {
        for (a, b) in c.iter().zip(n) {
            signal += a * a;
            residual += (b - a) * (b - a);
        }
    }
    signal /= total;
    residual /= total;
    if residual == 0.0 {
        return Ok(SNR_CAP_DB);
    }
    if signal == 0.0 {
        return Ok(-SNR_CAP_DB);
    }
    Ok((10.0 * (signal / residual).log10()).clamp(-SNR_CAP_DB, SNR_CAP_DB))
}

/// Sum of 1–3 sinusoids in the 0.20–0.35 Hz range with random phases and
/// relative amplitudes; unscaled.
fn bw_shape(n: usize, rate: f64, seed: u64) -> Vec<f64> {
    let mut rng = derive_rng(seed, "noise-bw");
    let count = rng.gen_range(1..=3usize);
    let parts: Vec<(f64, f64, f64)> = (0..count)
        .map(|_| {
            (
                rng.gen_range(0.20..0.35),
                rng.gen_range(0.5..1.0),
                rng.gen::<f64>() * std::f64::consts::TAU,
            )
        })
        .collect();
    (0..n)
        .map(|i| {
            let t = i as f64 / rate;
            parts
                .iter()
                .map(|(f, a, p)| a * (std::f64::consts::TAU * f * t + p).sin())
                .sum()
        })
        .collect()
}

/// `burst_density` non-overlapping Hann-windowed chirp transients at random
/// positions; unscaled.
fn ma_shape(kind: ModalityKind, n: usize, rate: f64, burst_density: u32, seed: u64) -> Vec<f64> {
    let mut rng = derive_rng(seed, "noise-ma");
    let (f_lo, f_hi) = chirp_range(kind);
    let (d_lo, d_hi) = burst_duration_range(kind);
    let mut shape = vec![0.0f64; n];
    let mut placed: Vec<(f64, f64)> = Vec::new();
    let mut attempts = 0;
    while placed.len() < burst_density as usize && attempts < 2000 {
        attempts += 1;
        let dur = rng.gen_range(d_lo..d_hi);
        let start = rng.gen_range(0.5..(60.0 - dur - 0.5));
        if placed
            .iter()
            .any(|&(s, d)| start < s + d + 0.25 && s < start + dur + 0.25)
        {
            continue;
        }
        placed.push((start, dur));
        let i_lo = (start * rate).ceil() as usize;
        let i_hi = (((start + dur) * rate).floor() as usize).min(n - 1);
        for (i, v) in shape.iter_mut().enumerate().take(i_hi + 1).skip(i_lo) {
            let tau = i as f64 / rate - start;
            let phase =
                std::f64::consts::TAU * (f_lo * tau + (f_hi - f_lo) * tau * tau / (2.0 * dur));
            let hann = 0.5 - 0.5 * (std::f64::consts::TAU * tau / dur).cos();
            *v += hann * phase.sin();
        }
    }
    shape
}

fn mean_square(samples: &[f64]) -> f64 {
    samples.iter().map(|v| v * v).sum::<f64>() / samples.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signals::{synth, Application, SynthParams};

    fn window(kind: ModalityKind, seed: u64) -> SignalWindow {
        let params = SynthParams {
            seed,
            hrv_rel: 0.02,
            ..SynthParams::default()
        };
        synth(kind, &params, &Application::Pain.sensor_spec(kind)).unwrap()
    }

    #[test]
    fn zero_amplitude_leaves_window_untouched() {
        let w = window(ModalityKind::Ecg, 1);
        let spec = NoiseSpec {
            amplitude: Some(0.0),
            ..NoiseSpec::bw(10.0, 1)
        };
        assert_eq!(inject(&w, &spec).unwrap(), w);
    }

    #[test]
    fn injection_hits_target_within_half_db_for_all_modalities_and_kinds() {
        for kind in ModalityKind::ALL {
            for target in [-5.0, 0.0, 5.0, 10.0, 20.0] {
                for (label, spec) in [
                    ("bw", NoiseSpec::bw(target, 9)),
                    ("ma", NoiseSpec::ma(target, 9)),
                ] {
                    let clean = window(kind, 3);
                    let noisy = inject(&clean, &spec).unwrap();
                    let measured = measure_snr(&clean, &noisy).unwrap();
                    assert!(
                        (measured - target).abs() <= 0.5,
                        "{kind} {label} target {target}: measured {measured}"
                    );
                }
            }
        }
    }

    #[test]
    fn eda_ma_with_density_two_yields_two_transient_regions() {
        let clean = window(ModalityKind::Eda, 5);
        let spec = NoiseSpec {
            burst_density: 2,
            ..NoiseSpec::ma(0.0, 5)
        };
        let noisy = inject(&clean, &spec).unwrap();
        // Count contiguous regions where the residual is non-negligible.
        let resid: Vec<f64> = noisy
            .primary()
            .iter()
            .zip(clean.primary())
            .map(|(a, b)| (a - b).abs())
            .collect();
        let peak = resid.iter().cloned().fold(0.0f64, f64::max);
        let mut regions = 0;
        let mut inside = false;
        for r in resid {
            let active = r > 0.02 * peak;
            if active && !inside {
                regions += 1;
            }
            inside = active;
        }
        assert_eq!(regions, 2);
    }

    #[test]
    fn snr_of_identical_windows_is_capped() {
        let w = window(ModalityKind::Ppg, 2);
        assert_eq!(measure_snr(&w, &w).unwrap(), SNR_CAP_DB);
    }

    #[test]
    fn equal_noise_and_signal_power_gives_zero_db() {
        let w = window(ModalityKind::Ppg, 2);
        let doubled = w.with_primary(w.primary().iter().map(|v| 2.0 * v).collect());
        let snr = measure_snr(&w, &doubled).unwrap();
        assert!(snr.abs() < 1e-9, "snr {snr}");
    }

    #[test]
    fn sinusoid_plus_white_noise_matches_analytic_snr() {
        // Unit sinusoid has power 0.5; white noise with σ = 0.1 has power
        // 0.01; expected SNR ≈ 10·log10(50) ≈ 17.0 dB. Averaged over seeds.
        use crate::signals::gauss;
        let rate = 500.0;
        let n = 30_000;
        let mut sum = 0.0;
        let seeds = 100;
        for seed in 0..seeds {
            let clean_samples: Vec<f64> = (0..n)
                .map(|i| (std::f64::consts::TAU * 5.0 * i as f64 / rate).sin())
                .collect();
            let mut rng = crate::signals::derive_rng(seed, "white");
            let noisy_samples: Vec<f64> = clean_samples
                .iter()
                .map(|v| v + 0.1 * gauss(&mut rng))
                .collect();
            let clean = SignalWindow {
                kind: ModalityKind::Ecg,
                sample_rate: 500,
                channels: vec![clean_samples],
                duration_s: 60.0,
                window_index: 0,
                truth_event_times: vec![],
            };
            let noisy = clean.with_primary(noisy_samples);
            sum += measure_snr(&clean, &noisy).unwrap();
        }
        let mean = sum / seeds as f64;
        assert!((mean - 17.0).abs() < 0.3, "mean snr {mean}");
    }

    #[test]
    fn injection_is_deterministic_under_seed() {
        let clean = window(ModalityKind::Ecg, 4);
        let a = inject(&clean, &NoiseSpec::bw(5.0, 77)).unwrap();
        let b = inject(&clean, &NoiseSpec::bw(5.0, 77)).unwrap();
        assert_eq!(a, b);
        let c = inject(&clean, &NoiseSpec::bw(5.0, 78)).unwrap();
        assert_ne!(a.channels, c.channels);
    }

    #[test]
    fn stacked_injection_powers_add() {
        for kind in ModalityKind::ALL {
            let clean = window(kind, 6);
            let t = 8.0;
            let bw = inject(&clean, &NoiseSpec::bw(t, 6)).unwrap();
            let both = inject(&bw, &NoiseSpec::ma(t, 7)).unwrap();
            let measured = measure_snr(&clean, &both).unwrap();
            assert!(
                measured <= t.min(t) + 3.0,
                "{kind}: stacked snr {measured} vs individual targets {t}"
            );
            // Equal-power components add to roughly 3 dB below one component.
            assert!(measured >= t - 3.6, "{kind}: stacked snr {measured}");
        }
    }

    #[test]
    fn equal_power_pair_lands_on_the_combined_target() {
        for kind in ModalityKind::ALL {
            for target in [0.0, 10.0] {
                let clean = window(kind, 8);
                let specs = [NoiseSpec::bw(target + 3.0, 8), NoiseSpec::ma(target + 3.0, 9)];
                let noisy = inject_all(&clean, &specs).unwrap();
                let measured = measure_snr(&clean, &noisy).unwrap();
                assert!(
                    (measured - target).abs() <= 0.5,
                    "{kind} combined target {target}: measured {measured}"
                );
            }
        }
    }

    #[test]
    fn zero_power_window_is_rejected() {
        let w = SignalWindow {
            kind: ModalityKind::Eda,
            sample_rate: 4,
            channels: vec![vec![0.0; 240]],
            duration_s: 60.0,
            window_index: 0,
            truth_event_times: vec![],
        };
        assert!(inject(&w, &NoiseSpec::bw(10.0, 0)).is_err());
    }

    #[test]
    fn mismatched_windows_are_rejected() {
        let a = window(ModalityKind::Eda, 1);
        let b = window(ModalityKind::Ppg, 1);
        assert!(measure_snr(&a, &b).is_err());
    }
}

//! Per-modality signal quality assessment.
//!
//! Quality is judged in three stages, each only able to make the verdict
//! worse, never better:
//!
//! 1. **Sensor status** — a detached or idle sensor is noisy by definition,
//!    regardless of what its buffer contains.
//! 2. **Blind SNR** — a reference-free estimate from the raw window: the
//!    Welch spectrum is split into the modality's physiological band and
//!    everything else, and the in-band over out-of-band power ratio stands
//!    in for SNR. Two thresholds map the estimate to reliable / uncertain /
//!    noisy, with boundary values resolving toward the worse label.
//! 3. **Discrepancy rules** — physiological plausibility checks on derived
//!    quantities (beat intervals in range, electrodermal activity above the
//!    sensor noise floor). A failed check downgrades reliable to uncertain;
//!    it never upgrades and never turns uncertain into noisy, because the
//!    rules detect implausibility, not the severity of corruption.
//!
//! The electrodermal in-band range includes DC: tonic level is signal, so
//! the squared mean of the raw window is counted as in-band power even
//! though the spectral estimate itself removes the mean before windowing.

use serde::{Deserialize, Serialize};

use crate::dsp::{blind_segment_len, psd_with_segment};
use crate::error::Result;
use crate::features::{self, FeatureContext};
use crate::noise::SNR_CAP_DB;
use crate::signals::{ModalityKind, SensorStatus, SignalWindow};

/// Three-way quality verdict; ordering is from best to worst.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(rename_all = "lowercase")]
pub enum QualityLabel {
    Reliable,
    Uncertain,
    Noisy,
}

/// Blind-SNR decision boundaries in dB.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QualityThresholds {
    /// At or below this the modality is noisy.
    pub noisy_max_db: f64,
    /// At or below this (but above `noisy_max_db`) the modality is
    /// uncertain.
    pub uncertain_max_db: f64,
}

impl Default for QualityThresholds {
    fn default() -> Self {
        QualityThresholds {
            noisy_max_db: 5.0,
            uncertain_max_db: 15.0,
        }
    }
}

/// Physiological plausibility bounds used by the discrepancy stage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DiscrepancyRules {
    /// Acceptable mean heart rate in beats per minute.
    pub hr_range_bpm: (f64, f64),
    /// Acceptable mean beat interval in seconds.
    pub rri_range_s: (f64, f64),
    /// Largest tolerated longest-to-shortest interval ratio.
    pub rri_ratio_max: f64,
    /// Electrodermal excursions below this amplitude (µS) look like a dead
    /// channel.
    pub eda_min_amplitude_us: f64,
    /// Electrodermal standard deviation below this (µS) is a flatline…
    pub eda_tonic_flat_std_us: f64,
    /// …provided the window covers at least this many seconds.
    pub eda_flat_min_duration_s: f64,
}

impl Default for DiscrepancyRules {
    fn default() -> Self {
        DiscrepancyRules {
            hr_range_bpm: (40.0, 180.0),
            rri_range_s: (0.33, 1.5),
            rri_ratio_max: 2.2,
            eda_min_amplitude_us: features::EDA_MIN_AMPLITUDE_US,
            eda_tonic_flat_std_us: 0.01,
            eda_flat_min_duration_s: 60.0,
        }
    }
}

/// Complete monitoring configuration.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct MonitorConfig {
    pub thresholds: QualityThresholds,
    pub rules: DiscrepancyRules,
}

/// Outcome of assessing one modality window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityAssessment {
    pub label: QualityLabel,
    /// Reference-free SNR estimate; absent when the sensor was not
    /// attached and nothing was measured.
    pub blind_snr_db: Option<f64>,
    /// Reason the discrepancy stage downgraded the label, when it did.
    pub discrepancy: Option<String>,
    pub status: SensorStatus,
}

/// Physiological band treated as signal by the blind estimate.
pub fn blind_band(kind: ModalityKind) -> (f64, f64) {
    match kind {
        ModalityKind::Ecg => (0.5, 40.0),
        ModalityKind::Ppg => (0.5, 8.0),
        ModalityKind::Emg => (20.0, 150.0),
        ModalityKind::Eda => (0.0, 0.15),
    }
}

/// Reference-free SNR estimate from the raw window, in dB, clamped to
/// ±120 dB. A silent window reports the floor.
pub fn blind_snr(window: &SignalWindow) -> Result<f64> {
    let rate = window.sample_rate as f64;
    let x = window.primary();
    let spectrum = psd_with_segment(x, rate, blind_segment_len(rate))?;
    let (lo, hi) = blind_band(window.kind);
    let mut in_band = spectrum.band_power(lo, hi);
    if window.kind == ModalityKind::Eda {
        in_band += features::mean(x).powi(2);
    }
    let out_band = (spectrum.total_power() - spectrum.band_power(lo, hi)).max(0.0);
    if out_band == 0.0 {
        return Ok(if in_band == 0.0 { -SNR_CAP_DB } else { SNR_CAP_DB });
    }
    if in_band == 0.0 {
        return Ok(-SNR_CAP_DB);
    }
    Ok((10.0 * (in_band / out_band).log10()).clamp(-SNR_CAP_DB, SNR_CAP_DB))
}

/// Maps a blind SNR estimate to a label; boundary values go to the worse
/// side.
pub fn label_for_snr(snr_db: f64, thresholds: &QualityThresholds) -> QualityLabel {
    if snr_db <= thresholds.noisy_max_db {
        QualityLabel::Noisy
    } else if snr_db <= thresholds.uncertain_max_db {
        QualityLabel::Uncertain
    } else {
        QualityLabel::Reliable
    }
}

/// Runs the modality's plausibility checks; returns the violated rule, if
/// any.
pub fn discrepancy_check(ctx: &FeatureContext, rules: &DiscrepancyRules) -> Option<String> {
    match ctx.kind {
        ModalityKind::Ecg | ModalityKind::Ppg => {
            let rri = match &ctx.rri {
                None => return Some("beat intervals unavailable".into()),
                Some(r) => r,
            };
            let (hr_lo, hr_hi) = rules.hr_range_bpm;
            if rri.hr_mean_bpm < hr_lo || rri.hr_mean_bpm > hr_hi {
                return Some(format!(
                    "mean heart rate {:.1} bpm outside [{hr_lo}, {hr_hi}]",
                    rri.hr_mean_bpm
                ));
            }
            let (rri_lo, rri_hi) = rules.rri_range_s;
            if rri.mean_s < rri_lo || rri.mean_s > rri_hi {
                return Some(format!(
                    "mean beat interval {:.3} s outside [{rri_lo}, {rri_hi}]",
                    rri.mean_s
                ));
            }
            if rri.ratio > rules.rri_ratio_max {
                return Some(format!(
                    "interval ratio {:.2} above {}",
                    rri.ratio, rules.rri_ratio_max
                ));
            }
            None
        }
        ModalityKind::Eda => {
            let x = &ctx.filtered;
            let span = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
                - x.iter().cloned().fold(f64::INFINITY, f64::min);
            if span < rules.eda_min_amplitude_us {
                return Some(format!(
                    "electrodermal span {span:.4} µS below the sensor floor"
                ));
            }
            let duration = x.len() as f64 / ctx.rate;
            if duration >= rules.eda_flat_min_duration_s
                && features::std(x) < rules.eda_tonic_flat_std_us
            {
                return Some("electrodermal channel is flat".into());
            }
            None
        }
        ModalityKind::Emg => None,
    }
}

/// Assesses one window, computing the derived quantities itself. Prefer
/// [`assess_with_context`] when a [`FeatureContext`] already exists for the
/// window.
pub fn assess(
    window: &SignalWindow,
    status: SensorStatus,
    config: &MonitorConfig,
) -> Result<QualityAssessment> {
    if status != SensorStatus::Attached {
        return Ok(detached_assessment(status));
    }
    let ctx = FeatureContext::from_window(window)?;
    assess_with_context(window, &ctx, status, config)
}

/// Assesses one window reusing an existing extraction context (saves the
/// filtering pass).
pub fn assess_with_context(
    window: &SignalWindow,
    ctx: &FeatureContext,
    status: SensorStatus,
    config: &MonitorConfig,
) -> Result<QualityAssessment> {
    if status != SensorStatus::Attached {
        return Ok(detached_assessment(status));
    }
    let snr = blind_snr(window)?;
    let mut label = label_for_snr(snr, &config.thresholds);
    let mut discrepancy = None;
    if label == QualityLabel::Reliable {
        if let Some(reason) = discrepancy_check(ctx, &config.rules) {
            label = QualityLabel::Uncertain;
            discrepancy = Some(reason);
        }
    }
    Ok(QualityAssessment {
        label,
        blind_snr_db: Some(snr),
        discrepancy,
        status,
    })
}

fn detached_assessment(status: SensorStatus) -> QualityAssessment {
    QualityAssessment {
        label: QualityLabel::Noisy,
        blind_snr_db: None,
        discrepancy: None,
        status,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::{inject, inject_all, measure_snr, NoiseSpec};
    use crate::signals::{synth, Application, SynthParams, WINDOW_SECONDS};

    fn window(kind: ModalityKind, seed: u64) -> SignalWindow {
        let params = SynthParams {
            seed,
            hrv_rel: 0.02,
            ..SynthParams::default()
        };
        synth(kind, &params, &Application::Pain.sensor_spec(kind)).unwrap()
    }

    fn assess_window(w: &SignalWindow) -> QualityAssessment {
        assess(w, SensorStatus::Attached, &MonitorConfig::default()).unwrap()
    }

    #[test]
    fn clean_windows_are_reliable_on_every_modality() {
        for kind in ModalityKind::ALL {
            let a = assess_window(&window(kind, 41));
            assert_eq!(a.label, QualityLabel::Reliable, "{kind}: {a:?}");
            assert!(a.blind_snr_db.unwrap() > 15.0, "{kind}: {a:?}");
        }
    }

    #[test]
    fn moderate_drift_reads_uncertain_and_heavy_mixed_noise_reads_noisy() {
        for kind in ModalityKind::ALL {
            let clean = window(kind, 42);
            let drifted = inject(&clean, &NoiseSpec::bw(10.0, 1)).unwrap();
            let a = assess_window(&drifted);
            assert_eq!(a.label, QualityLabel::Uncertain, "{kind} at 10 dB: {a:?}");

            let heavy = inject_all(
                &clean,
                &[NoiseSpec::bw(3.0, 2), NoiseSpec::ma(3.0, 3)],
            )
            .unwrap();
            let a = assess_window(&heavy);
            assert_eq!(a.label, QualityLabel::Noisy, "{kind} at 0 dB: {a:?}");
        }
    }

    #[test]
    fn cardiac_mixed_noise_at_ten_db_stays_uncertain() {
        // The mixed condition leaks some chirp power into the cardiac band;
        // the estimate must still land in the uncertain bracket.
        let clean = window(ModalityKind::Ecg, 43);
        let noisy = inject_all(
            &clean,
            &[NoiseSpec::bw(13.0, 4), NoiseSpec::ma(13.0, 5)],
        )
        .unwrap();
        let a = assess_window(&noisy);
        assert_eq!(a.label, QualityLabel::Uncertain, "{a:?}");
    }

    #[test]
    fn blind_estimate_tracks_the_reference_within_four_db() {
        for kind in [ModalityKind::Ecg, ModalityKind::Eda] {
            for target in [0.0, 10.0] {
                let clean = window(kind, 44);
                let noisy = inject(&clean, &NoiseSpec::bw(target, 6)).unwrap();
                let reference = measure_snr(&clean, &noisy).unwrap();
                let blind = blind_snr(&noisy).unwrap();
                assert!(
                    (blind - reference).abs() <= 4.0,
                    "{kind} at {target} dB: blind {blind:.2}, reference {reference:.2}"
                );
            }
        }
    }

    #[test]
    fn threshold_boundaries_resolve_toward_the_worse_label() {
        let t = QualityThresholds::default();
        assert_eq!(label_for_snr(5.0, &t), QualityLabel::Noisy);
        assert_eq!(label_for_snr(5.0 + 1e-9, &t), QualityLabel::Uncertain);
        assert_eq!(label_for_snr(15.0, &t), QualityLabel::Uncertain);
        assert_eq!(label_for_snr(15.0 + 1e-9, &t), QualityLabel::Reliable);
        assert_eq!(label_for_snr(-60.0, &t), QualityLabel::Noisy);
    }

    #[test]
    fn detached_sensor_is_noisy_no_matter_how_clean_the_buffer() {
        let w = window(ModalityKind::Ecg, 45);
        for status in [SensorStatus::Detached, SensorStatus::Idle] {
            let a = assess(&w, status, &MonitorConfig::default()).unwrap();
            assert_eq!(a.label, QualityLabel::Noisy);
            assert_eq!(a.blind_snr_db, None);
        }
    }

    #[test]
    fn implausible_heart_rate_downgrades_reliable_to_uncertain() {
        let params = SynthParams {
            heart_rate_bpm: 200.0,
            seed: 46,
            ..SynthParams::default()
        };
        let spec = Application::Pain.sensor_spec(ModalityKind::Ecg);
        let w = synth(ModalityKind::Ecg, &params, &spec).unwrap();
        let a = assess_window(&w);
        assert_eq!(a.label, QualityLabel::Uncertain, "{a:?}");
        assert!(a.discrepancy.is_some(), "{a:?}");
    }

    #[test]
    fn discrepancy_never_downgrades_past_uncertain() {
        // Same implausible rhythm, but buried in heavy noise: the blind
        // stage already says noisy and the discrepancy stage must not be
        // consulted (nor change anything).
        let params = SynthParams {
            heart_rate_bpm: 200.0,
            seed: 47,
            ..SynthParams::default()
        };
        let spec = Application::Pain.sensor_spec(ModalityKind::Ecg);
        let clean = synth(ModalityKind::Ecg, &params, &spec).unwrap();
        let noisy = inject(&clean, &NoiseSpec::bw(0.0, 7)).unwrap();
        let a = assess_window(&noisy);
        assert_eq!(a.label, QualityLabel::Noisy);
        assert_eq!(a.discrepancy, None);
    }

    #[test]
    fn flat_electrodermal_channel_is_caught_by_discrepancy() {
        // A constant level has all its power at DC: the blind estimate sees
        // a perfect in-band signal, so only the plausibility check notices.
        let spec = Application::Pain.sensor_spec(ModalityKind::Eda);
        let w = SignalWindow {
            kind: ModalityKind::Eda,
            sample_rate: spec.sample_rate,
            channels: vec![vec![2.0; spec.samples_per_channel()]],
            duration_s: WINDOW_SECONDS,
            window_index: 0,
            truth_event_times: vec![],
        };
        let a = assess_window(&w);
        assert_eq!(a.label, QualityLabel::Uncertain, "{a:?}");
        assert!(a.blind_snr_db.unwrap() >= 100.0, "{a:?}");
        assert!(a.discrepancy.is_some());
    }

    #[test]
    fn silent_window_reports_the_snr_floor() {
        let w = SignalWindow {
            kind: ModalityKind::Emg,
            sample_rate: 500,
            channels: vec![vec![0.0; 30_000]],
            duration_s: WINDOW_SECONDS,
            window_index: 0,
            truth_event_times: vec![],
        };
        assert_eq!(blind_snr(&w).unwrap(), -SNR_CAP_DB);
    }
}

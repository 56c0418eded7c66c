//! Domain types for multimodal signal windows and deterministic synthetic
//! generation.
//!
//! Four modalities are modeled: ECG, EMG, PPG, and EDA. All processing happens
//! on fixed 60 s windows; a window stores one sample buffer per channel plus
//! the generator's ground-truth event times (R-peaks, SCR onsets) so detectors
//! can be scored against a known reference.
//!
//! Synthetic morphology is deliberately simple — pulse trains, tonic drift
//! with phasic rises, band-limited bursts — because the downstream logic
//! depends on peak timing, SNR, and tonic level rather than waveform realism.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{AmserError, Result};

/// Fixed analysis window length in seconds.
pub const WINDOW_SECONDS: f64 = 60.0;

/// One sensor signal type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ModalityKind {
    #[serde(rename = "ECG")]
    Ecg,
    #[serde(rename = "EMG")]
    Emg,
    #[serde(rename = "PPG")]
    Ppg,
    #[serde(rename = "EDA")]
    Eda,
}

impl ModalityKind {
    /// All modalities in canonical (fusion) order.
    pub const ALL: [ModalityKind; 4] = [
        ModalityKind::Ecg,
        ModalityKind::Emg,
        ModalityKind::Ppg,
        ModalityKind::Eda,
    ];

    /// Short uppercase name, e.g. `"ECG"`.
    pub fn name(self) -> &'static str {
        match self {
            ModalityKind::Ecg => "ECG",
            ModalityKind::Emg => "EMG",
            ModalityKind::Ppg => "PPG",
            ModalityKind::Eda => "EDA",
        }
    }
}

impl fmt::Display for ModalityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModalityKind {
    type Err = AmserError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "ECG" => Ok(ModalityKind::Ecg),
            "EMG" => Ok(ModalityKind::Emg),
            "PPG" => Ok(ModalityKind::Ppg),
            "EDA" => Ok(ModalityKind::Eda),
            other => Err(AmserError::InvalidParam(format!(
                "unknown modality '{other}'"
            ))),
        }
    }
}

/// Attachment / duty state of a physical sensor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SensorStatus {
    /// Sensor attached and sampling.
    Attached,
    /// Sensor physically detached; its data is untrustworthy.
    Detached,
    /// Sensor switched off by the controller.
    Idle,
}

/// Target application; determines the modality set and sensor rates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Application {
    Pain,
    Stress,
}

impl Application {
    /// Modalities used by this application, in canonical fusion order.
    pub fn modalities(self) -> &'static [ModalityKind] {
        match self {
            Application::Pain => &[
                ModalityKind::Ecg,
                ModalityKind::Emg,
                ModalityKind::Ppg,
                ModalityKind::Eda,
            ],
            Application::Stress => &[ModalityKind::Ecg, ModalityKind::Ppg, ModalityKind::Eda],
        }
    }

    /// Default sensor configuration for one modality under this application.
    pub fn sensor_spec(self, kind: ModalityKind) -> SensorSpec {
        let (sample_rate, channels, bytes_per_window) = match (self, kind) {
            (Application::Pain, ModalityKind::Ecg) => (500, 2, 8192),
            (Application::Stress, ModalityKind::Ecg) => (700, 1, 8192),
            (_, ModalityKind::Emg) => (500, 1, 4096),
            (_, ModalityKind::Ppg) => (64, 1, 512),
            (_, ModalityKind::Eda) => (4, 1, 32),
        };
        SensorSpec {
            kind,
            sample_rate,
            channels,
            bytes_per_window,
            status: SensorStatus::Attached,
        }
    }

    /// Lowercase name, e.g. `"pain"`.
    pub fn name(self) -> &'static str {
        match self {
            Application::Pain => "pain",
            Application::Stress => "stress",
        }
    }
}

impl fmt::Display for Application {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Application {
    type Err = AmserError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pain" => Ok(Application::Pain),
            "stress" => Ok(Application::Stress),
            other => Err(AmserError::InvalidParam(format!(
                "unknown application '{other}'"
            ))),
        }
    }
}

/// Static description of one sensor channel group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorSpec {
    pub kind: ModalityKind,
    /// Sampling rate in Hz.
    pub sample_rate: u32,
    /// Number of simultaneously sampled channels (≥ 1).
    pub channels: usize,
    /// Raw bytes produced per 60 s window (configuration constant).
    pub bytes_per_window: u64,
    pub status: SensorStatus,
}

impl SensorSpec {
    /// Samples per channel in one window.
    pub fn samples_per_channel(&self) -> usize {
        self.sample_rate as usize * WINDOW_SECONDS as usize
    }

    fn validate(&self) -> Result<()> {
        if self.sample_rate == 0 {
            return Err(AmserError::InvalidParam("sample_rate must be > 0".into()));
        }
        if self.channels == 0 {
            return Err(AmserError::InvalidParam("channels must be ≥ 1".into()));
        }
        Ok(())
    }
}

/// One 60 s segment of one modality's samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalWindow {
    pub kind: ModalityKind,
    /// Sampling rate in Hz.
    pub sample_rate: u32,
    /// Per-channel sample buffers; every channel holds `sample_rate × 60` values.
    pub channels: Vec<Vec<f64>>,
    /// Window length in seconds (always 60).
    pub duration_s: f64,
    /// Ordinal position of this window within its stream.
    pub window_index: u32,
    /// Generator ground truth: R-peak times (ECG/PPG), SCR onsets (EDA),
    /// burst centers (EMG), in seconds from window start. Empty for segmented
    /// or imported data.
    pub truth_event_times: Vec<f64>,
}

impl SignalWindow {
    /// Samples per channel.
    pub fn samples_per_channel(&self) -> usize {
        self.channels.first().map_or(0, Vec::len)
    }

    /// Total sample count across channels (`rate × 60 × channels`).
    pub fn total_samples(&self) -> usize {
        self.channels.iter().map(Vec::len).sum()
    }

    /// The first channel, used as the analysis lead for multi-channel sensors.
    pub fn primary(&self) -> &[f64] {
        &self.channels[0]
    }

    /// Checks the sample-count law and value finiteness.
    pub fn validate(&self) -> Result<()> {
        let expect = self.sample_rate as usize * WINDOW_SECONDS as usize;
        for (i, ch) in self.channels.iter().enumerate() {
            if ch.len() != expect {
                return Err(AmserError::LengthMismatch(format!(
                    "channel {i}: {} samples, expected {expect}",
                    ch.len()
                )));
            }
            if ch.iter().any(|v| !v.is_finite()) {
                return Err(AmserError::DegenerateInput(format!(
                    "channel {i} contains non-finite samples"
                )));
            }
        }
        Ok(())
    }

    /// Builds a window with the same shape but new primary-channel samples.
    pub fn with_primary(&self, samples: Vec<f64>) -> SignalWindow {
        let mut out = self.clone();
        out.channels[0] = samples;
        out
    }
}

/// Generator parameters shared by all modalities; each generator reads the
/// fields relevant to its kind and ignores the rest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthParams {
    /// Heart rate in beats per minute (ECG, PPG).
    pub heart_rate_bpm: f64,
    /// Relative beat-to-beat interval jitter (ECG, PPG), e.g. 0.02 = 2 %.
    pub hrv_rel: f64,
    /// Peak amplitude of the dominant waveform component.
    pub amplitude: f64,
    /// EDA tonic level in µS.
    pub eda_tonic_us: f64,
    /// EDA slow-drift amplitude in µS (sinusoidal, ~2 min period).
    pub eda_drift_us: f64,
    /// Skin-conductance responses per minute (EDA).
    pub scr_rate_per_min: f64,
    /// SCR peak amplitude in µS (EDA).
    pub scr_amplitude_us: f64,
    /// Generator seed; identical parameters and seed give identical windows.
    pub seed: u64,
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams {
            heart_rate_bpm: 60.0,
            hrv_rel: 0.0,
            amplitude: 1.0,
            eda_tonic_us: 2.0,
            eda_drift_us: 0.02,
            scr_rate_per_min: 3.0,
            scr_amplitude_us: 0.3,
            seed: 0,
        }
    }
}

/// 64-bit FNV-1a hash; used for stable seed derivation and mask signatures.
pub(crate) fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Derives an independent RNG stream from a base seed and a textual tag.
pub(crate) fn derive_rng(seed: u64, tag: &str) -> ChaCha8Rng {
    let mut bytes = Vec::with_capacity(8 + tag.len());
    bytes.extend_from_slice(&seed.to_le_bytes());
    bytes.extend_from_slice(tag.as_bytes());
    ChaCha8Rng::seed_from_u64(fnv1a64(&bytes))
}

/// Standard-normal draw via the Box–Muller transform.
pub(crate) fn gauss(rng: &mut impl Rng) -> f64 {
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen::<f64>();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Generates one synthetic window for the given modality.
///
/// Deterministic for fixed `(kind, params, spec)`. The returned window records
/// its ground-truth event times so detectors can be scored against them.
pub fn synth(kind: ModalityKind, params: &SynthParams, spec: &SensorSpec) -> Result<SignalWindow> {
    spec.validate()?;
    if matches!(kind, ModalityKind::Ecg | ModalityKind::Ppg)
        && !(30.0..=220.0).contains(&params.heart_rate_bpm)
    {
        return Err(AmserError::InvalidParam(format!(
            "heart rate {} bpm outside plausible range [30, 220]",
            params.heart_rate_bpm
        )));
    }
    if params.amplitude <= 0.0 {
        return Err(AmserError::InvalidParam("amplitude must be > 0".into()));
    }

    let n = spec.samples_per_channel();
    let rate = spec.sample_rate as f64;
    let (primary, truth) = match kind {
        ModalityKind::Ecg => synth_pulse_train(params, rate, n, PulseShape::Ecg),
        ModalityKind::Ppg => synth_pulse_train(params, rate, n, PulseShape::Ppg),
        ModalityKind::Eda => synth_eda(params, rate, n),
        ModalityKind::Emg => synth_emg(params, rate, n),
    };

    let mut channels = Vec::with_capacity(spec.channels);
    channels.push(primary);
    for _ in 1..spec.channels {
        // Secondary leads carry the same morphology at reduced gain.
        channels.push(channels[0].iter().map(|v| v * 0.6).collect());
    }

    let window = SignalWindow {
        kind,
        sample_rate: spec.sample_rate,
        channels,
        duration_s: WINDOW_SECONDS,
        window_index: 0,
        truth_event_times: truth,
    };
    window.validate()?;
    Ok(window)
}

enum PulseShape {
    Ecg,
    Ppg,
}

/// ECG: narrow Gaussian R-peaks on a flat baseline. PPG: a wider two-lobe
/// pulse (systolic peak plus a smaller dicrotic lobe) at the same beat times.
fn synth_pulse_train(
    params: &SynthParams,
    rate: f64,
    n: usize,
    shape: PulseShape,
) -> (Vec<f64>, Vec<f64>) {
    let mut rng = derive_rng(params.seed, "pulse");
    let rri = 60.0 / params.heart_rate_bpm;
    let mut samples = vec![0.0f64; n];
    let mut truth = Vec::new();

    // First beat placed inside the first interval so an integer heart rate
    // yields exactly that many beats in 60 s when jitter is zero.
    let mut t = 0.3 * rri;
    while t < WINDOW_SECONDS {
        truth.push(t);
        let interval = rri * (1.0 + params.hrv_rel * gauss(&mut rng));
        t += interval.max(0.2 * rri);
    }

    match shape {
        PulseShape::Ecg => {
            let sigma = 0.015; // 15 ms R-wave width
            for &peak in &truth {
                add_gaussian(&mut samples, rate, peak, sigma, params.amplitude);
            }
        }
        PulseShape::Ppg => {
            for (i, &peak) in truth.iter().enumerate() {
                let next = truth.get(i + 1).copied().unwrap_or(peak + rri);
                let beat_rri = (next - peak).max(0.2 * rri);
                let s1 = 0.09 * beat_rri;
                let s2 = 0.12 * beat_rri;
                add_gaussian(&mut samples, rate, peak, s1, params.amplitude);
                add_gaussian(
                    &mut samples,
                    rate,
                    peak + 0.35 * beat_rri,
                    s2,
                    0.35 * params.amplitude,
                );
            }
        }
    }

    remove_mean(&mut samples);
    (samples, truth)
}

fn add_gaussian(samples: &mut [f64], rate: f64, center: f64, sigma: f64, amp: f64) {
    let lo = (((center - 5.0 * sigma) * rate).floor().max(0.0)) as usize;
    let hi = ((((center + 5.0 * sigma) * rate).ceil()) as usize).min(samples.len());
    for (i, s) in samples.iter_mut().enumerate().take(hi).skip(lo) {
        let dt = i as f64 / rate - center;
        *s += amp * (-0.5 * (dt / sigma).powi(2)).exp();
    }
}

/// EDA: slowly drifting tonic level plus sparse phasic rises (SCRs) with a
/// fast exponential rise and slow decay. Ground truth records SCR onsets.
fn synth_eda(params: &SynthParams, rate: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut rng = derive_rng(params.seed, "eda");
    let drift_freq = 1.0 / 120.0;
    let drift_phase = rng.gen::<f64>() * std::f64::consts::TAU;
    let mut samples: Vec<f64> = (0..n)
        .map(|i| {
            let t = i as f64 / rate;
            params.eda_tonic_us
                + params.eda_drift_us
                    * (std::f64::consts::TAU * drift_freq * t + drift_phase).sin()
        })
        .collect();

    let count = params.scr_rate_per_min.round().max(0.0) as usize;
    let mut onsets: Vec<f64> = Vec::new();
    let mut attempts = 0;
    while onsets.len() < count && attempts < 1000 {
        attempts += 1;
        let cand = 2.0 + rng.gen::<f64>() * 50.0;
        if onsets.iter().all(|&o| (o - cand).abs() >= 4.0) {
            onsets.push(cand);
        }
    }
    onsets.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let tau_rise = 0.75f64;
    let tau_decay = 4.0f64;
    // Peak value of the double-exponential kernel, used to normalize amplitude.
    let t_peak = tau_rise * (1.0 + tau_decay / tau_rise).ln();
    let peak = (1.0 - (-t_peak / tau_rise).exp()) * (-t_peak / tau_decay).exp();
    for &onset in &onsets {
        let start = (onset * rate).floor() as usize;
        for (i, s) in samples.iter_mut().enumerate().skip(start).take(n) {
            let tau = i as f64 / rate - onset;
            if tau < 0.0 {
                continue;
            }
            let v = (1.0 - (-tau / tau_rise).exp()) * (-tau / tau_decay).exp();
            *s += params.scr_amplitude_us * v / peak;
        }
    }
    (samples, onsets)
}

/// EMG: band-limited (20–150 Hz) stochastic noise, amplitude-modulated by
/// sparse activation bursts. Ground truth records burst centers.
fn synth_emg(params: &SynthParams, rate: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut rng = derive_rng(params.seed, "emg");

    // Band-limit white noise spectrally: FFT, zero bins outside 20–150 Hz,
    // inverse FFT. Keeps synthesis independent of the filtering module.
    let mut spectrum: Vec<Complex<f64>> = (0..n)
        .map(|_| Complex::new(gauss(&mut rng), 0.0))
        .collect();
    let mut planner = rustfft::FftPlanner::new();
    planner.plan_fft_forward(n).process(&mut spectrum);
    let (low, high) = (20.0, (150.0f64).min(rate / 2.0 * 0.96));
    let df = rate / n as f64;
    for (k, bin) in spectrum.iter_mut().enumerate() {
        let f = if k <= n / 2 {
            k as f64 * df
        } else {
            (n - k) as f64 * df
        };
        if !(low..=high).contains(&f) {
            *bin = Complex::new(0.0, 0.0);
        }
    }
    planner.plan_fft_inverse(n).process(&mut spectrum);
    let scale = 1.0 / n as f64;
    let mut noise: Vec<f64> = spectrum.iter().map(|c| c.re * scale).collect();
    let rms = (noise.iter().map(|v| v * v).sum::<f64>() / n as f64).sqrt();
    if rms > 0.0 {
        for v in &mut noise {
            *v /= rms;
        }
    }

    // Activation envelope: resting tone plus ~12 bursts per minute.
    let mut envelope = vec![0.25f64; n];
    let mut centers = Vec::new();
    for _ in 0..12 {
        let center = 1.0 + rng.gen::<f64>() * (WINDOW_SECONDS - 2.0);
        let dur = 0.6 + rng.gen::<f64>() * 0.6;
        centers.push(center);
        let lo = (((center - dur / 2.0) * rate).floor().max(0.0)) as usize;
        let hi = ((((center + dur / 2.0) * rate).ceil()) as usize).min(n);
        for (i, e) in envelope.iter_mut().enumerate().take(hi).skip(lo) {
            let phase = (i as f64 / rate - (center - dur / 2.0)) / dur;
            let hann = 0.5 - 0.5 * (std::f64::consts::TAU * phase).cos();
            *e = e.max(0.25 + 0.75 * hann);
        }
    }
    centers.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let mut samples: Vec<f64> = noise
        .iter()
        .zip(&envelope)
        .map(|(x, e)| params.amplitude * x * e)
        .collect();
    remove_mean(&mut samples);
    (samples, centers)
}

fn remove_mean(samples: &mut [f64]) {
    let mean = samples.iter().sum::<f64>() / samples.len() as f64;
    for v in samples {
        *v -= mean;
    }
}

/// Splits a continuous multi-channel stream into consecutive, non-overlapping
/// 60 s windows. A trailing partial window is discarded; the second return
/// value is `true` when the stream was shorter than one full window.
pub fn segment(channels: &[Vec<f64>], spec: &SensorSpec) -> Result<(Vec<SignalWindow>, bool)> {
    spec.validate()?;
    if channels.is_empty() {
        return Err(AmserError::InvalidParam("no channels supplied".into()));
    }
    let len = channels[0].len();
    if channels.iter().any(|c| c.len() != len) {
        return Err(AmserError::LengthMismatch(
            "channels have differing lengths".into(),
        ));
    }
    let per_window = spec.samples_per_channel();
    let count = len / per_window;
    let mut windows = Vec::with_capacity(count);
    for w in 0..count {
        let start = w * per_window;
        let chans: Vec<Vec<f64>> = channels
            .iter()
            .map(|c| c[start..start + per_window].to_vec())
            .collect();
        windows.push(SignalWindow {
            kind: spec.kind,
            sample_rate: spec.sample_rate,
            channels: chans,
            duration_s: WINDOW_SECONDS,
            window_index: w as u32,
            truth_event_times: Vec::new(),
        });
    }
    Ok((windows, count == 0))
}

/// Writes a window as CSV: header `timestamp,ch0[,ch1...]`, one row per
/// sample instant, timestamps in seconds with six decimal places.
pub fn write_csv<W: Write>(window: &SignalWindow, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["timestamp".to_string()];
    header.extend((0..window.channels.len()).map(|i| format!("ch{i}")));
    w.write_record(&header)?;
    let rate = window.sample_rate as f64;
    for i in 0..window.samples_per_channel() {
        let mut row = vec![format!("{:.6}", i as f64 / rate)];
        for ch in &window.channels {
            row.push(format!("{:.9}", ch[i]));
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a CSV stream produced by [`write_csv`] (or any stream with the same
/// header convention) into per-channel sample buffers plus the sampling rate
/// inferred from the first two timestamps.
pub fn read_csv<R: Read>(input: R) -> Result<(Vec<Vec<f64>>, u32)> {
    let mut reader = csv::Reader::from_reader(input);
    let headers = reader.headers()?.clone();
    if headers.is_empty() || headers.get(0) != Some("timestamp") {
        return Err(AmserError::InvalidParam(
            "csv header must start with 'timestamp'".into(),
        ));
    }
    let n_channels = headers.len() - 1;
    if n_channels == 0 {
        return Err(AmserError::InvalidParam("csv has no channel columns".into()));
    }
    let mut channels: Vec<Vec<f64>> = vec![Vec::new(); n_channels];
    let mut timestamps: Vec<f64> = Vec::new();
    for record in reader.records() {
        let record = record?;
        let parse = |s: &str| -> Result<f64> {
            s.trim()
                .parse::<f64>()
                .map_err(|e| AmserError::InvalidParam(format!("bad csv value '{s}': {e}")))
        };
        timestamps.push(parse(record.get(0).unwrap_or(""))?);
        for (c, chan) in channels.iter_mut().enumerate() {
            chan.push(parse(record.get(c + 1).unwrap_or(""))?);
        }
    }
    if timestamps.len() < 2 {
        return Err(AmserError::InsufficientData(
            "csv needs at least two rows to infer the sampling rate".into(),
        ));
    }
    let dt = timestamps[1] - timestamps[0];
    if dt <= 0.0 {
        return Err(AmserError::InvalidParam(
            "csv timestamps must be strictly increasing".into(),
        ));
    }
    Ok((channels, (1.0 / dt).round() as u32))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pain_spec(kind: ModalityKind) -> SensorSpec {
        Application::Pain.sensor_spec(kind)
    }

    #[test]
    fn sample_count_law_holds_for_all_modalities() {
        for app in [Application::Pain, Application::Stress] {
            for &kind in app.modalities() {
                let spec = app.sensor_spec(kind);
                let w = synth(kind, &SynthParams::default(), &spec).unwrap();
                assert_eq!(
                    w.total_samples(),
                    spec.sample_rate as usize * 60 * spec.channels,
                    "{app} {kind}"
                );
                w.validate().unwrap();
            }
        }
    }

    #[test]
    fn ecg_at_60_bpm_has_exactly_60_peaks() {
        let w = synth(
            ModalityKind::Ecg,
            &SynthParams::default(),
            &pain_spec(ModalityKind::Ecg),
        )
        .unwrap();
        assert_eq!(w.truth_event_times.len(), 60);
    }

    #[test]
    fn ecg_at_75_bpm_has_exactly_75_peaks() {
        let params = SynthParams {
            heart_rate_bpm: 75.0,
            ..SynthParams::default()
        };
        let w = synth(ModalityKind::Ecg, &params, &pain_spec(ModalityKind::Ecg)).unwrap();
        assert_eq!(w.truth_event_times.len(), 75);
    }

    #[test]
    fn eda_without_phasic_events_is_near_constant() {
        let params = SynthParams {
            scr_rate_per_min: 0.0,
            ..SynthParams::default()
        };
        let w = synth(ModalityKind::Eda, &params, &pain_spec(ModalityKind::Eda)).unwrap();
        let s = w.primary();
        let mean = s.iter().sum::<f64>() / s.len() as f64;
        let std = (s.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / s.len() as f64).sqrt();
        assert!(std < 0.01 * mean, "std {std} vs mean {mean}");
    }

    #[test]
    fn synth_is_deterministic_under_seed() {
        for kind in ModalityKind::ALL {
            let params = SynthParams {
                seed: 42,
                hrv_rel: 0.02,
                ..SynthParams::default()
            };
            let a = synth(kind, &params, &pain_spec(kind)).unwrap();
            let b = synth(kind, &params, &pain_spec(kind)).unwrap();
            assert_eq!(a, b, "{kind} not bit-identical");
            let c = synth(
                kind,
                &SynthParams {
                    seed: 43,
                    ..params
                },
                &pain_spec(kind),
            )
            .unwrap();
            assert_ne!(a.channels, c.channels, "{kind} ignores the seed");
        }
    }

    #[test]
    fn ecg_pain_spec_has_two_channels() {
        let w = synth(
            ModalityKind::Ecg,
            &SynthParams::default(),
            &pain_spec(ModalityKind::Ecg),
        )
        .unwrap();
        assert_eq!(w.channels.len(), 2);
        assert_eq!(w.samples_per_channel(), 30_000);
    }

    #[test]
    fn synth_rejects_implausible_heart_rate() {
        let params = SynthParams {
            heart_rate_bpm: 250.0,
            ..SynthParams::default()
        };
        assert!(synth(ModalityKind::Ecg, &params, &pain_spec(ModalityKind::Ecg)).is_err());
    }

    #[test]
    fn synth_rejects_zero_rate() {
        let mut spec = pain_spec(ModalityKind::Eda);
        spec.sample_rate = 0;
        assert!(synth(ModalityKind::Eda, &SynthParams::default(), &spec).is_err());
    }

    #[test]
    fn segment_splits_180s_eda_into_three_windows() {
        let spec = pain_spec(ModalityKind::Eda);
        let stream = vec![vec![0.5f64; 4 * 180]];
        let (windows, short) = segment(&stream, &spec).unwrap();
        assert_eq!(windows.len(), 3);
        assert!(!short);
        assert!(windows.iter().all(|w| w.samples_per_channel() == 240));
        assert_eq!(windows[2].window_index, 2);
    }

    #[test]
    fn segment_flags_short_stream() {
        let spec = pain_spec(ModalityKind::Eda);
        let stream = vec![vec![0.0f64; 4 * 59]];
        let (windows, short) = segment(&stream, &spec).unwrap();
        assert!(windows.is_empty());
        assert!(short);
    }

    #[test]
    fn segment_discards_trailing_partial_window() {
        let spec = pain_spec(ModalityKind::Eda);
        let stream = vec![vec![0.0f64; 4 * 150]];
        let (windows, short) = segment(&stream, &spec).unwrap();
        assert_eq!(windows.len(), 2);
        assert!(!short);
    }

    #[test]
    fn csv_round_trip_preserves_samples_and_rate() {
        let w = synth(
            ModalityKind::Ppg,
            &SynthParams::default(),
            &pain_spec(ModalityKind::Ppg),
        )
        .unwrap();
        let mut buf = Vec::new();
        write_csv(&w, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("timestamp,ch0\n"));
        let (channels, rate) = read_csv(buf.as_slice()).unwrap();
        assert_eq!(rate, 64);
        assert_eq!(channels.len(), 1);
        assert_eq!(channels[0].len(), w.samples_per_channel());
        for (a, b) in channels[0].iter().zip(w.primary()) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn emg_is_band_limited_with_bursts() {
        let w = synth(
            ModalityKind::Emg,
            &SynthParams::default(),
            &pain_spec(ModalityKind::Emg),
        )
        .unwrap();
        assert_eq!(w.truth_event_times.len(), 12);
        // Crude spectral check: the lag-1 autocorrelation of 20–150 Hz noise
        // at 500 Hz is far from 1 (a drift signal would be close to 1).
        let s = w.primary();
        let var = s.iter().map(|v| v * v).sum::<f64>();
        let lag1: f64 = s.windows(2).map(|p| p[0] * p[1]).sum::<f64>() / var;
        assert!(lag1 < 0.9, "lag-1 autocorrelation {lag1}");
    }
}

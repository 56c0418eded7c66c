//! Signal conditioning: FIR filtering, peak detection, RR intervals, and
//! Welch power spectral density estimation.
//!
//! Filtering uses windowed-sinc FIR kernels (Hamming window) applied
//! forward and backward for zero phase, with mirror padding at the edges.
//! Convolution runs in the frequency domain; kernel spectra are cached so
//! repeated filtering of same-length windows reuses the transform, and FFT
//! lengths are rounded up to 5-smooth sizes.
//!
//! The PSD estimator is Welch's method: Hann-windowed segments with 50 %
//! overlap, per-segment mean removal, and density normalization such that
//! the one-sided integral of the PSD recovers the signal variance. Short
//! segments are zero-padded to at least 256 points for a usable frequency
//! grid; the density normalization is unaffected by the padding.

use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rustfft::{num_complex::Complex, FftPlanner};

use crate::error::{AmserError, Result};
use crate::signals::{fnv1a64, ModalityKind, SignalWindow};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Cached kernel spectra keyed by (kernel id, FFT length).
static KERNEL_SPECTRA: OnceLock<Mutex<HashMap<(u64, usize), Arc<Vec<Complex<f64>>>>>> =
    OnceLock::new();

/// A linear-phase FIR kernel with a precomputed identity for spectrum
/// caching. Kernels always have odd length so the group delay is integral.
#[derive(Debug, Clone, PartialEq)]
pub struct Fir {
    coeffs: Vec<f64>,
    id: u64,
}

impl Fir {
    /// Wraps raw coefficients. The length must be odd and non-zero.
    pub fn new(coeffs: Vec<f64>) -> Result<Fir> {
        if coeffs.is_empty() || coeffs.len() % 2 == 0 {
            return Err(AmserError::InvalidParam(
                "FIR kernels must have odd, non-zero length".into(),
            ));
        }
        let mut bytes = Vec::with_capacity(coeffs.len() * 8);
        for c in &coeffs {
            bytes.extend_from_slice(&c.to_le_bytes());
        }
        let id = fnv1a64(&bytes);
        Ok(Fir { coeffs, id })
    }

    /// Number of taps.
    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    /// True when the kernel has no taps (never, by construction).
    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Kernel coefficients.
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }
}

/// Designs a windowed-sinc low-pass kernel with unity DC gain.
///
/// # Arguments
/// * `cutoff_hz` – −6 dB cutoff frequency; must lie in (0, rate/2).
/// * `rate` – sample rate in Hz.
/// * `taps` – kernel length; must be odd.
pub fn design_lowpass(cutoff_hz: f64, rate: f64, taps: usize) -> Result<Fir> {
    if !(rate > 0.0) || !(cutoff_hz > 0.0) || cutoff_hz >= rate / 2.0 {
        return Err(AmserError::InvalidParam(format!(
            "low-pass cutoff {cutoff_hz} Hz invalid for rate {rate} Hz"
        )));
    }
    let mut coeffs = sinc_kernel(cutoff_hz, rate, taps)?;
    let sum: f64 = coeffs.iter().sum();
    for c in &mut coeffs {
        *c /= sum;
    }
    Fir::new(coeffs)
}

/// Designs a band-pass kernel as the difference of two unity-DC low-pass
/// kernels, giving approximately unity gain inside `[lo_hz, hi_hz]` and zero
/// gain at DC.
pub fn design_bandpass(lo_hz: f64, hi_hz: f64, rate: f64, taps: usize) -> Result<Fir> {
    if !(lo_hz > 0.0) || hi_hz <= lo_hz {
        return Err(AmserError::InvalidParam(format!(
            "band-pass edges ({lo_hz}, {hi_hz}) Hz are not ordered"
        )));
    }
    let hi = design_lowpass(hi_hz, rate, taps)?;
    let lo = design_lowpass(lo_hz, rate, taps)?;
    let coeffs = hi
        .coeffs
        .iter()
        .zip(&lo.coeffs)
        .map(|(a, b)| a - b)
        .collect();
    Fir::new(coeffs)
}

fn sinc_kernel(cutoff_hz: f64, rate: f64, taps: usize) -> Result<Vec<f64>> {
    if taps == 0 || taps % 2 == 0 {
        return Err(AmserError::InvalidParam(
            "tap count must be odd and non-zero".into(),
        ));
    }
    let mid = (taps / 2) as isize;
    let fc = cutoff_hz / rate;
    Ok((0..taps)
        .map(|i| {
            let k = i as isize - mid;
            let x = 2.0 * fc * k as f64;
            let sinc = if k == 0 {
                1.0
            } else {
                (std::f64::consts::PI * x).sin() / (std::f64::consts::PI * x)
            };
            let hamming = 0.54
                - 0.46 * (std::f64::consts::TAU * i as f64 / (taps - 1) as f64).cos();
            2.0 * fc * sinc * hamming
        })
        .collect())
}

/// The cleaning band applied to each modality before feature extraction:
/// ECG 0.5–40 Hz, PPG 0.5–8 Hz, EMG 20–150 Hz band-passes, and a 1 Hz
/// low-pass for EDA. Tap counts grow with the sharpness required; the ECG
/// kernel must suppress sub-0.5 Hz drift by well over 20 dB.
pub fn default_fir(kind: ModalityKind, rate: f64) -> Result<Fir> {
    match kind {
        ModalityKind::Ecg => design_bandpass(0.5, 40.0, rate, 4001),
        ModalityKind::Ppg => design_bandpass(0.5, 8.0, rate, 601),
        ModalityKind::Emg => design_bandpass(20.0, 150.0, rate, 501),
        ModalityKind::Eda => design_lowpass(1.0, rate, 61),
    }
}

/// Zero-phase filtering: the kernel is applied forward, then backward, so
/// the effective magnitude response is squared and the phase is zero. The
/// input is extended by mirror padding (one kernel length on each side)
/// before filtering to suppress edge transients.
pub fn filtfilt(fir: &Fir, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() < 2 {
        return Err(AmserError::InsufficientData(
            "filtfilt needs at least two samples".into(),
        ));
    }
    let pad = fir.len().min(x.len() - 1);
    let mut padded = Vec::with_capacity(x.len() + 2 * pad);
    // Mirror without repeating the edge sample: x[pad], …, x[1].
    for i in (1..=pad).rev() {
        padded.push(x[i]);
    }
    padded.extend_from_slice(x);
    for i in 1..=pad {
        padded.push(x[x.len() - 1 - i]);
    }

    let forward = convolve_same(fir, &padded);
    let mut reversed: Vec<f64> = forward.into_iter().rev().collect();
    reversed = convolve_same(fir, &reversed);
    reversed.reverse();
    Ok(reversed[pad..pad + x.len()].to_vec())
}

/// Applies the modality's default cleaning filter to every channel of a
/// window.
pub fn filter_window(window: &SignalWindow) -> Result<SignalWindow> {
    let fir = default_fir(window.kind, window.sample_rate as f64)?;
    let mut out = window.clone();
    for ch in &mut out.channels {
        *ch = filtfilt(&fir, ch)?;
    }
    Ok(out)
}

/// Centered ("same"-size) convolution via FFT with a cached kernel spectrum.
fn convolve_same(fir: &Fir, x: &[f64]) -> Vec<f64> {
    let k = fir.len();
    let full = x.len() + k - 1;
    let len = next_fast_len(full);

    let kernel_fft = {
        let cache = KERNEL_SPECTRA.get_or_init(|| Mutex::new(HashMap::new()));
        let mut cache = cache.lock().expect("kernel cache poisoned");
        cache
            .entry((fir.id, len))
            .or_insert_with(|| {
                let mut buf: Vec<Complex<f64>> = fir
                    .coeffs
                    .iter()
                    .map(|&c| Complex::new(c, 0.0))
                    .chain(std::iter::repeat(Complex::new(0.0, 0.0)))
                    .take(len)
                    .collect();
                fft_in_place(&mut buf, true);
                Arc::new(buf)
            })
            .clone()
    };

    let mut buf: Vec<Complex<f64>> = x
        .iter()
        .map(|&v| Complex::new(v, 0.0))
        .chain(std::iter::repeat(Complex::new(0.0, 0.0)))
        .take(len)
        .collect();
    fft_in_place(&mut buf, true);
    for (b, kf) in buf.iter_mut().zip(kernel_fft.iter()) {
        *b *= kf;
    }
    fft_in_place(&mut buf, false);
    let delay = (k - 1) / 2;
    buf[delay..delay + x.len()]
        .iter()
        .map(|c| c.re / len as f64)
        .collect()
}

fn fft_in_place(buf: &mut [Complex<f64>], forward: bool) {
    PLANNER.with(|p| {
        let fft = if forward {
            p.borrow_mut().plan_fft_forward(buf.len())
        } else {
            p.borrow_mut().plan_fft_inverse(buf.len())
        };
        fft.process(buf);
    });
}

/// Smallest 5-smooth integer (2^a·3^b·5^c) not less than `n`.
pub(crate) fn next_fast_len(n: usize) -> usize {
    if n <= 1 {
        return 1;
    }
    let mut candidate = n;
    loop {
        let mut m = candidate;
        for p in [2, 3, 5] {
            while m % p == 0 {
                m /= p;
            }
        }
        if m == 1 {
            return candidate;
        }
        candidate += 1;
    }
}

/// Finds peaks with a block-adaptive amplitude threshold and a refractory
/// period.
///
/// The signal is split into 10 s blocks; within each block, candidates must
/// exceed half the block's 95th-percentile amplitude. A candidate closer
/// than 0.25 s to the previously accepted peak replaces it if taller and is
/// dropped otherwise. Returns ascending sample indices.
pub fn detect_peaks(x: &[f64], rate: f64) -> Vec<usize> {
    if x.len() < 3 || !(rate > 0.0) {
        return Vec::new();
    }
    let block = ((10.0 * rate).round() as usize).max(1);
    let n_blocks = x.len().div_ceil(block);
    let thresholds: Vec<f64> = (0..n_blocks)
        .map(|b| {
            let seg = &x[b * block..((b + 1) * block).min(x.len())];
            let mut sorted: Vec<f64> = seg.to_vec();
            sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
            0.5 * percentile_sorted(&sorted, 95.0)
        })
        .collect();

    let refractory = (0.25 * rate).round() as usize;
    let mut peaks: Vec<usize> = Vec::new();
    for i in 1..x.len() - 1 {
        if !(x[i - 1] < x[i] && x[i] >= x[i + 1]) {
            continue;
        }
        if x[i] <= thresholds[i / block] {
            continue;
        }
        match peaks.last() {
            Some(&last) if i - last < refractory => {
                if x[i] > x[last] {
                    *peaks.last_mut().unwrap() = i;
                }
            }
            _ => peaks.push(i),
        }
    }
    peaks
}

/// Nearest-rank percentile of an ascending slice.
fn percentile_sorted(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let rank = ((p / 100.0) * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

/// Inter-beat interval statistics derived from detected peaks.
///
/// Standard deviations use the population convention (divide by n). The
/// heart-rate series is the per-interval instantaneous rate `60 / rri`.
#[derive(Debug, Clone, PartialEq)]
pub struct RriStats {
    /// Successive peak-to-peak intervals in seconds.
    pub intervals: Vec<f64>,
    pub mean_s: f64,
    pub std_s: f64,
    pub min_s: f64,
    pub max_s: f64,
    pub range_s: f64,
    /// Root mean square of successive interval differences.
    pub rmssd_s: f64,
    /// Longest over shortest interval.
    pub ratio: f64,
    pub hr_mean_bpm: f64,
    pub hr_std_bpm: f64,
}

/// Converts peak indices to interval statistics. At least three peaks (two
/// intervals) are required.
pub fn to_rri(peaks: &[usize], rate: f64) -> Result<RriStats> {
    if peaks.len() < 3 {
        return Err(AmserError::InsufficientData(format!(
            "need at least 3 peaks for interval statistics, got {}",
            peaks.len()
        )));
    }
    if !(rate > 0.0) {
        return Err(AmserError::InvalidParam("sample rate must be positive".into()));
    }
    let intervals: Vec<f64> = peaks
        .windows(2)
        .map(|w| (w[1] - w[0]) as f64 / rate)
        .collect();
    let n = intervals.len() as f64;
    let mean = intervals.iter().sum::<f64>() / n;
    let var = intervals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let min = intervals.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = intervals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let rmssd = if intervals.len() < 2 {
        0.0
    } else {
        (intervals
            .windows(2)
            .map(|w| (w[1] - w[0]).powi(2))
            .sum::<f64>()
            / (intervals.len() - 1) as f64)
            .sqrt()
    };
    let hr: Vec<f64> = intervals.iter().map(|v| 60.0 / v).collect();
    let hr_mean = hr.iter().sum::<f64>() / n;
    let hr_var = hr.iter().map(|v| (v - hr_mean).powi(2)).sum::<f64>() / n;
    Ok(RriStats {
        mean_s: mean,
        std_s: var.sqrt(),
        min_s: min,
        max_s: max,
        range_s: max - min,
        rmssd_s: rmssd,
        ratio: max / min,
        hr_mean_bpm: hr_mean,
        hr_std_bpm: hr_var.sqrt(),
        intervals,
    })
}

/// One-sided Welch power spectral density.
#[derive(Debug, Clone, PartialEq)]
pub struct Psd {
    /// Bin center frequencies in Hz, ascending from 0.
    pub freqs: Vec<f64>,
    /// Power density per bin; integrating `power · df` recovers variance.
    pub power: Vec<f64>,
    /// Frequency resolution in Hz.
    pub df: f64,
    /// Segment length before zero-padding.
    pub segment_len: usize,
}

impl Psd {
    /// Integrated power over `[lo_hz, hi_hz]` (bin centers inclusive).
    pub fn band_power(&self, lo_hz: f64, hi_hz: f64) -> f64 {
        self.freqs
            .iter()
            .zip(&self.power)
            .filter(|(f, _)| **f >= lo_hz && **f <= hi_hz)
            .map(|(_, p)| p * self.df)
            .sum()
    }

    /// Total integrated power.
    pub fn total_power(&self) -> f64 {
        self.power.iter().map(|p| p * self.df).sum()
    }
}

/// Default Welch segment length for a sample rate: the power of two nearest
/// four seconds of signal, at least 16 samples.
pub fn psd_segment_len(rate: f64) -> usize {
    pow2_round(4.0 * rate).max(16)
}

/// Segment length used by the blind quality estimate: the power of two
/// nearest sixteen seconds, capped at 8192 samples. Longer segments buy the
/// low-frequency resolution needed to separate drift from in-band signal.
pub(crate) fn blind_segment_len(rate: f64) -> usize {
    pow2_round(16.0 * rate).clamp(16, 8192)
}

fn pow2_round(x: f64) -> usize {
    1usize << (x.log2().round().max(0.0) as u32)
}

/// Welch PSD with the default segment length for the given rate.
pub fn psd(x: &[f64], rate: f64) -> Result<Psd> {
    psd_with_segment(x, rate, psd_segment_len(rate))
}

/// Welch PSD with an explicit segment length: Hann window, 50 % overlap,
/// segments zero-padded to at least 256 points. The global mean is removed
/// once up front — removing per-segment means instead would both bias the
/// variance bookkeeping on short segments and silently swallow the slow
/// drift power that quality monitoring must observe.
pub fn psd_with_segment(x: &[f64], rate: f64, segment_len: usize) -> Result<Psd> {
    if !(rate > 0.0) {
        return Err(AmserError::InvalidParam("sample rate must be positive".into()));
    }
    if segment_len < 4 {
        return Err(AmserError::InvalidParam("segment length must be at least 4".into()));
    }
    if x.len() < segment_len {
        return Err(AmserError::InsufficientData(format!(
            "signal of {} samples is shorter than one segment ({segment_len})",
            x.len()
        )));
    }
    let hop = segment_len / 2;
    let padded_len = segment_len.max(256);
    let window: Vec<f64> = (0..segment_len)
        .map(|i| 0.5 - 0.5 * (std::f64::consts::TAU * i as f64 / segment_len as f64).cos())
        .collect();
    let window_power: f64 = window.iter().map(|w| w * w).sum();
    let global_mean = x.iter().sum::<f64>() / x.len() as f64;

    let n_bins = padded_len / 2 + 1;
    let mut acc = vec![0.0f64; n_bins];
    let mut n_segments = 0usize;
    let mut start = 0;
    while start + segment_len <= x.len() {
        let seg = &x[start..start + segment_len];
        let mut buf: Vec<Complex<f64>> = seg
            .iter()
            .zip(&window)
            .map(|(&v, &w)| Complex::new((v - global_mean) * w, 0.0))
            .chain(std::iter::repeat(Complex::new(0.0, 0.0)))
            .take(padded_len)
            .collect();
        fft_in_place(&mut buf, true);
        for (k, slot) in acc.iter_mut().enumerate() {
            let mag2 = buf[k].norm_sqr();
            let one_sided = if k == 0 || k == padded_len / 2 { 1.0 } else { 2.0 };
            *slot += one_sided * mag2 / (rate * window_power);
        }
        n_segments += 1;
        start += hop;
    }
    for slot in &mut acc {
        *slot /= n_segments as f64;
    }
    let df = rate / padded_len as f64;
    Ok(Psd {
        freqs: (0..n_bins).map(|k| k as f64 * df).collect(),
        power: acc,
        df,
        segment_len,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signals::{derive_rng, gauss, synth, Application, SynthParams};

    fn sine(freq: f64, rate: f64, seconds: f64) -> Vec<f64> {
        let n = (rate * seconds).round() as usize;
        (0..n)
            .map(|i| (std::f64::consts::TAU * freq * i as f64 / rate).sin())
            .collect()
    }

    fn rms(x: &[f64]) -> f64 {
        (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
    }

    #[test]
    fn lowpass_has_unity_dc_gain_and_bandpass_has_none() {
        let lp = design_lowpass(1.0, 4.0, 61).unwrap();
        let sum: f64 = lp.coeffs().iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
        let bp = design_bandpass(0.5, 40.0, 500.0, 2001).unwrap();
        let sum: f64 = bp.coeffs().iter().sum();
        assert!(sum.abs() < 1e-12, "band-pass DC gain {sum}");
    }

    #[test]
    fn ecg_bandpass_suppresses_slow_drift_at_both_rates() {
        for rate in [500.0, 700.0] {
            let fir = default_fir(ModalityKind::Ecg, rate).unwrap();
            let drift = sine(0.2, rate, 60.0);
            let filtered = filtfilt(&fir, &drift).unwrap();
            let atten_db = 20.0 * (rms(&filtered) / rms(&drift)).log10();
            assert!(
                atten_db <= -20.0,
                "0.2 Hz drift only attenuated {atten_db:.1} dB at {rate} Hz"
            );
        }
    }

    #[test]
    fn passband_tone_survives_with_unity_gain_and_zero_phase() {
        let fir = default_fir(ModalityKind::Ecg, 500.0).unwrap();
        let tone = sine(10.0, 500.0, 60.0);
        let filtered = filtfilt(&fir, &tone).unwrap();
        // Compare away from the edges; zero phase means samples line up.
        let lo = 5000;
        let hi = tone.len() - 5000;
        let max_err = tone[lo..hi]
            .iter()
            .zip(&filtered[lo..hi])
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max)
            ;
        assert!(max_err < 0.02, "max deviation {max_err}");
    }

    #[test]
    fn filtfilt_keeps_an_impulse_centered() {
        let fir = design_lowpass(8.0, 64.0, 101).unwrap();
        let mut x = vec![0.0; 1001];
        x[500] = 1.0;
        let y = filtfilt(&fir, &x).unwrap();
        let argmax = y
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0;
        assert_eq!(argmax, 500);
        // Symmetry of the response around the impulse.
        for off in 1..200 {
            assert!((y[500 - off] - y[500 + off]).abs() < 1e-9);
        }
    }

    #[test]
    fn next_fast_len_finds_five_smooth_sizes() {
        assert_eq!(next_fast_len(1), 1);
        assert_eq!(next_fast_len(7), 8);
        assert_eq!(next_fast_len(1000), 1000);
        assert_eq!(next_fast_len(1001), 1024);
        assert_eq!(next_fast_len(2049), 2160);
    }

    #[test]
    fn peaks_are_recovered_across_heart_rates() {
        for hr in [45.0, 60.0, 90.0, 150.0, 180.0] {
            let params = SynthParams {
                heart_rate_bpm: hr,
                seed: 11,
                ..SynthParams::default()
            };
            let spec = Application::Stress.sensor_spec(ModalityKind::Ecg);
            let w = synth(ModalityKind::Ecg, &params, &spec).unwrap();
            let filtered = filter_window(&w).unwrap();
            let peaks = detect_peaks(filtered.primary(), 700.0);
            let times: Vec<f64> = peaks.iter().map(|&i| i as f64 / 700.0).collect();
            let tol = 0.06;
            let hits = w
                .truth_event_times
                .iter()
                .filter(|t| times.iter().any(|p| (p - **t).abs() < tol))
                .count();
            let recall = hits as f64 / w.truth_event_times.len() as f64;
            let precision = times
                .iter()
                .filter(|p| w.truth_event_times.iter().any(|t| (*p - t).abs() < tol))
                .count() as f64
                / times.len() as f64;
            assert!(
                recall >= 0.95 && precision >= 0.95,
                "hr {hr}: precision {precision:.3}, recall {recall:.3}"
            );
        }
    }

    #[test]
    fn refractory_period_merges_close_candidates() {
        let rate = 100.0;
        let mut x = vec![0.0; 1000];
        x[300] = 1.0;
        x[310] = 1.2; // 0.1 s later: inside the 0.25 s refractory window.
        x[600] = 1.0;
        let peaks = detect_peaks(&x, rate);
        assert_eq!(peaks, vec![310, 600], "taller close candidate should win");
    }

    #[test]
    fn rri_statistics_on_a_steady_rhythm() {
        let peaks: Vec<usize> = (0..60).map(|i| i * 500).collect(); // 1 s apart at 500 Hz.
        let stats = to_rri(&peaks, 500.0).unwrap();
        assert_eq!(stats.intervals.len(), 59);
        assert!((stats.mean_s - 1.0).abs() < 1e-12);
        assert!(stats.std_s < 1e-12);
        assert!((stats.hr_mean_bpm - 60.0).abs() < 1e-9);
        assert!((stats.ratio - 1.0).abs() < 1e-12);
        assert!(stats.rmssd_s < 1e-12);
    }

    #[test]
    fn too_few_peaks_is_an_error() {
        assert!(to_rri(&[10, 500], 500.0).is_err());
    }

    #[test]
    fn psd_integral_matches_variance_for_white_noise() {
        for rate in [4.0f64, 64.0, 500.0, 700.0] {
            let n = (rate * 60.0).round() as usize;
            let mut rng = derive_rng(3, "psd-white");
            let x: Vec<f64> = (0..n).map(|_| gauss(&mut rng)).collect();
            let mean = x.iter().sum::<f64>() / n as f64;
            let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
            let p = psd(&x, rate).unwrap();
            let total = p.total_power();
            let rel = (total - var).abs() / var;
            assert!(rel < 0.05, "rate {rate}: integral {total}, variance {var}");
        }
    }

    #[test]
    fn psd_locates_a_tone_and_captures_its_power() {
        let rate = 64.0;
        let x = sine(5.0, rate, 60.0);
        let p = psd(&x, rate).unwrap();
        let peak_f = p.freqs[p
            .power
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0];
        assert!((peak_f - 5.0).abs() <= p.df, "peak at {peak_f} Hz");
        let in_band = p.band_power(4.0, 6.0);
        assert!((in_band - 0.5).abs() < 0.025, "tone band power {in_band}");
    }

    #[test]
    fn segment_lengths_follow_the_rate() {
        assert_eq!(psd_segment_len(500.0), 2048);
        assert_eq!(psd_segment_len(700.0), 2048);
        assert_eq!(psd_segment_len(64.0), 256);
        assert_eq!(psd_segment_len(4.0), 16);
        assert_eq!(blind_segment_len(500.0), 8192);
        assert_eq!(blind_segment_len(700.0), 8192);
        assert_eq!(blind_segment_len(64.0), 1024);
        assert_eq!(blind_segment_len(4.0), 64);
    }

    #[test]
    fn psd_rejects_short_input() {
        assert!(psd(&[1.0; 8], 4.0).is_err());
    }
}

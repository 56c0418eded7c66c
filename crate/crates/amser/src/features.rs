//! Feature catalogs, per-modality extraction, and mask-based fusion.
//!
//! A [`FeatureCatalog`] names, per modality, the full ordered feature list
//! and the subset retained when the modality is only partially trusted. The
//! subset is always an order-consistent subsequence of the full list, so a
//! masked vector is a pure projection of the full vector — nothing is ever
//! recomputed, re-ordered, or re-scaled when the mask changes.
//!
//! Feature names form a small language (`q25`, `block_mean_3`, `bp_0.5_2`,
//! `acf_lag1`, …) resolved by [`FeatureOp::parse`]; unknown or inapplicable
//! names are rejected when the catalog is validated, not at extraction time.
//!
//! Extraction always conditions the raw window with the modality's default
//! filter first. Quantities that cannot be computed on a given window (for
//! example interval statistics when too few beats are detected) yield zero
//! and mark the vector as degraded rather than aborting the pipeline — a
//! fielded loop must keep producing predictions on bad data, and the quality
//! monitor, not the extractor, is responsible for reacting to it.

use std::collections::{BTreeMap, BTreeSet};

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::dsp::{self, Psd, RriStats};
use crate::error::{AmserError, Result};
use crate::signals::{Application, ModalityKind, SignalWindow, WINDOW_SECONDS};

/// Minimum electrodermal response amplitude in µS; smaller phasic peaks are
/// treated as noise rather than events.
pub const EDA_MIN_AMPLITUDE_US: f64 = 0.05;

/// How much of a modality's feature set survives fusion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureMask {
    /// Every catalog feature is kept.
    Full,
    /// Only the catalog's uncertain subset is kept.
    Subset,
    /// The modality contributes nothing.
    Empty,
}

impl FeatureMask {
    /// Number of features this mask retains for one modality.
    pub fn retained(&self, modality: &ModalityCatalog) -> usize {
        match self {
            FeatureMask::Full => modality.features.len(),
            FeatureMask::Subset => modality.uncertain_subset.len(),
            FeatureMask::Empty => 0,
        }
    }
}

/// Feature plan for one modality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModalityCatalog {
    pub kind: ModalityKind,
    /// Full ordered feature list.
    pub features: Vec<String>,
    /// Features kept while the modality is uncertain; an order-consistent
    /// subsequence of `features`.
    pub uncertain_subset: Vec<String>,
}

impl ModalityCatalog {
    /// Positions of the uncertain subset inside the full list.
    pub fn subset_indices(&self) -> Vec<usize> {
        let by_name: BTreeMap<&str, usize> = self
            .features
            .iter()
            .enumerate()
            .map(|(i, n)| (n.as_str(), i))
            .collect();
        self.uncertain_subset
            .iter()
            .filter_map(|n| by_name.get(n.as_str()).copied())
            .collect()
    }
}

/// Per-application feature plan across all modalities, in fusion order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureCatalog {
    pub application: Application,
    pub modalities: Vec<ModalityCatalog>,
}

impl FeatureCatalog {
    /// Checks structural soundness: the modalities must be a non-empty
    /// selection of the application's, in fusion order (a rig may omit
    /// sensors but never re-orders them); every name must parse and apply to
    /// its modality; names must be unique; and each subset must be a
    /// non-empty order-consistent subsequence of its full list.
    pub fn validate(&self) -> Result<()> {
        let expected = self.application.modalities();
        let found: Vec<ModalityKind> = self.modalities.iter().map(|m| m.kind).collect();
        let mut cursor = expected.iter();
        let in_order = !found.is_empty()
            && found.iter().all(|k| cursor.any(|e| e == k));
        if !in_order {
            return Err(AmserError::InvalidConfig(format!(
                "catalog modalities {found:?} are not an ordered selection of \
                 {} modalities ({expected:?})",
                self.application
            )));
        }
        for m in &self.modalities {
            if m.features.is_empty() {
                return Err(AmserError::InvalidConfig(format!(
                    "{} catalog has no features",
                    m.kind
                )));
            }
            let mut seen = BTreeSet::new();
            for name in &m.features {
                if !seen.insert(name.as_str()) {
                    return Err(AmserError::InvalidConfig(format!(
                        "duplicate feature `{name}` in {} catalog",
                        m.kind
                    )));
                }
                let op = FeatureOp::parse(name)?;
                if !op.applies_to(m.kind) {
                    return Err(AmserError::InvalidConfig(format!(
                        "feature `{name}` is not defined for {}",
                        m.kind
                    )));
                }
            }
            if m.uncertain_subset.is_empty() {
                return Err(AmserError::InvalidConfig(format!(
                    "{} catalog has an empty uncertain subset",
                    m.kind
                )));
            }
            let by_name: BTreeMap<&str, usize> = m
                .features
                .iter()
                .enumerate()
                .map(|(i, n)| (n.as_str(), i))
                .collect();
            let mut last: Option<usize> = None;
            for name in &m.uncertain_subset {
                let idx = *by_name.get(name.as_str()).ok_or_else(|| {
                    AmserError::InvalidConfig(format!(
                        "subset feature `{name}` is not in the {} full list",
                        m.kind
                    ))
                })?;
                if let Some(prev) = last {
                    if idx <= prev {
                        return Err(AmserError::InvalidConfig(format!(
                            "{} subset is not order-consistent at `{name}`",
                            m.kind
                        )));
                    }
                }
                last = Some(idx);
            }
        }
        Ok(())
    }

    /// The catalog entry for one modality.
    pub fn modality(&self, kind: ModalityKind) -> Result<&ModalityCatalog> {
        self.modalities
            .iter()
            .find(|m| m.kind == kind)
            .ok_or_else(|| {
                AmserError::InvalidConfig(format!("{kind} is not part of this catalog"))
            })
    }

    /// Modalities in fusion order.
    pub fn kinds(&self) -> Vec<ModalityKind> {
        self.modalities.iter().map(|m| m.kind).collect()
    }

    /// Total feature count with every modality at full resolution.
    pub fn total_full(&self) -> usize {
        self.modalities.iter().map(|m| m.features.len()).sum()
    }

    /// Features retained by a mask assignment; modalities missing from the
    /// map contribute nothing.
    pub fn retained_count(&self, masks: &BTreeMap<ModalityKind, FeatureMask>) -> usize {
        self.modalities
            .iter()
            .map(|m| {
                masks
                    .get(&m.kind)
                    .copied()
                    .unwrap_or(FeatureMask::Empty)
                    .retained(m)
            })
            .sum()
    }

    /// Retained over total as an exact rational.
    pub fn retention(&self, masks: &BTreeMap<ModalityKind, FeatureMask>) -> Ratio<u64> {
        Ratio::new(
            self.retained_count(masks) as u64,
            self.total_full() as u64,
        )
    }

    /// Mask assignment keeping everything — the fixed-pipeline reference.
    pub fn full_masks(&self) -> BTreeMap<ModalityKind, FeatureMask> {
        self.kinds()
            .into_iter()
            .map(|k| (k, FeatureMask::Full))
            .collect()
    }
}

/// One extracted vector: values in catalog order for a single modality, or
/// fused across modalities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub window_index: u32,
    /// False when any value could not be computed from the window (the
    /// slot holds zero instead) — a hint that upstream quality is poor.
    pub valid: bool,
}

/// Intermediate products shared by all features of one window.
#[derive(Debug, Clone)]
pub struct FeatureContext {
    pub kind: ModalityKind,
    pub rate: f64,
    /// Primary channel after the modality's default cleaning filter.
    pub filtered: Vec<f64>,
    pub psd: Psd,
    /// Beat intervals; cardiac modalities only, and only when at least
    /// three beats were detected.
    pub rri: Option<RriStats>,
    /// Moving-RMS activation envelope; muscle channel only.
    pub envelope: Option<Vec<f64>>,
    /// Activation bursts counted from the envelope; muscle channel only.
    pub burst_count: Option<usize>,
    /// Slow (tonic) component; electrodermal channel only.
    pub tonic: Option<Vec<f64>>,
    /// Fast (phasic) residual; electrodermal channel only.
    pub phasic: Option<Vec<f64>>,
    /// Detected response amplitudes ≥ [`EDA_MIN_AMPLITUDE_US`].
    pub scr_amplitudes: Option<Vec<f64>>,
}

impl FeatureContext {
    /// Filters the window and derives the modality-specific intermediates.
    pub fn from_window(window: &SignalWindow) -> Result<FeatureContext> {
        window.validate()?;
        let rate = window.sample_rate as f64;
        let filtered_w = dsp::filter_window(window)?;
        let filtered = filtered_w.primary().to_vec();
        let psd = dsp::psd(&filtered, rate)?;

        let mut ctx = FeatureContext {
            kind: window.kind,
            rate,
            filtered,
            psd,
            rri: None,
            envelope: None,
            burst_count: None,
            tonic: None,
            phasic: None,
            scr_amplitudes: None,
        };
        match window.kind {
            ModalityKind::Ecg | ModalityKind::Ppg => {
                let peaks = dsp::detect_peaks(&ctx.filtered, rate);
                ctx.rri = dsp::to_rri(&peaks, rate).ok();
            }
            ModalityKind::Emg => {
                let env = moving_rms(&ctx.filtered, (0.1 * rate).round() as usize);
                ctx.burst_count = Some(count_bursts(&env, rate));
                ctx.envelope = Some(env);
            }
            ModalityKind::Eda => {
                let tonic = moving_average(&ctx.filtered, (10.0 * rate).round() as usize);
                let phasic: Vec<f64> = ctx
                    .filtered
                    .iter()
                    .zip(&tonic)
                    .map(|(x, t)| x - t)
                    .collect();
                ctx.scr_amplitudes = Some(scr_peaks(&phasic, rate, EDA_MIN_AMPLITUDE_US));
                ctx.tonic = Some(tonic);
                ctx.phasic = Some(phasic);
            }
        }
        Ok(ctx)
    }
}

/// Extracts the full catalog vector for one modality window.
pub fn extract(window: &SignalWindow, catalog: &FeatureCatalog) -> Result<FeatureVector> {
    let ctx = FeatureContext::from_window(window)?;
    extract_from_context(&ctx, window.window_index, catalog)
}

/// Extracts the full catalog vector from an already-computed context.
///
/// The filtering and spectral work lives in [`FeatureContext::from_window`];
/// callers that also feed the context to the quality monitor can share it
/// instead of paying for the signal processing twice.
pub fn extract_from_context(
    ctx: &FeatureContext,
    window_index: u32,
    catalog: &FeatureCatalog,
) -> Result<FeatureVector> {
    let plan = catalog.modality(ctx.kind)?;
    let mut values = Vec::with_capacity(plan.features.len());
    let mut valid = true;
    for name in &plan.features {
        let op = FeatureOp::parse(name)?;
        match op.eval(ctx) {
            Some(v) if v.is_finite() => values.push(v),
            _ => {
                values.push(0.0);
                valid = false;
            }
        }
    }
    Ok(FeatureVector {
        values,
        window_index,
        valid,
    })
}

/// Concatenates per-modality vectors under a mask assignment, in the
/// catalog's fusion order.
///
/// # Errors
/// A modality whose mask is `Full` or `Subset` must be present in `parts`
/// with a vector of the full catalog length; `Empty` modalities are skipped
/// whether present or not.
pub fn fuse(
    catalog: &FeatureCatalog,
    parts: &BTreeMap<ModalityKind, FeatureVector>,
    masks: &BTreeMap<ModalityKind, FeatureMask>,
) -> Result<FeatureVector> {
    let mut values = Vec::with_capacity(catalog.retained_count(masks));
    let mut valid = true;
    let mut window_index: Option<u32> = None;
    for m in &catalog.modalities {
        let mask = masks.get(&m.kind).copied().unwrap_or(FeatureMask::Empty);
        if mask == FeatureMask::Empty {
            continue;
        }
        let part = parts.get(&m.kind).ok_or_else(|| {
            AmserError::InvalidMask(format!(
                "mask keeps {} but no vector was provided for it",
                m.kind
            ))
        })?;
        if part.values.len() != m.features.len() {
            return Err(AmserError::DimensionMismatch(format!(
                "{} vector has {} values, catalog expects {}",
                m.kind,
                part.values.len(),
                m.features.len()
            )));
        }
        match window_index {
            None => window_index = Some(part.window_index),
            Some(w) if w != part.window_index => {
                return Err(AmserError::InvalidParam(format!(
                    "fusing vectors from different windows ({w} vs {})",
                    part.window_index
                )));
            }
            Some(_) => {}
        }
        valid &= part.valid;
        match mask {
            FeatureMask::Full => values.extend_from_slice(&part.values),
            FeatureMask::Subset => {
                for idx in m.subset_indices() {
                    values.push(part.values[idx]);
                }
            }
            FeatureMask::Empty => unreachable!(),
        }
    }
    Ok(FeatureVector {
        values,
        window_index: window_index.unwrap_or(0),
        valid,
    })
}

/// A parsed feature name.
///
/// Block features use 10 s blocks (`block_mean_0` … `block_mean_5` over a
/// standard window), `block6_*` uses 6 s blocks, and `half_mean_*` splits
/// the window in two. Band powers integrate the PSD of the filtered signal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FeatureOp {
    HrMean,
    HrStd,
    RriMean,
    RriStd,
    RriMin,
    RriMax,
    RriRatio,
    RriRmssd,
    RriRange,
    Mean,
    MeanAbs,
    Std,
    Rms,
    Skewness,
    Kurtosis,
    Min,
    Max,
    Range,
    Median,
    Quantile(f64),
    AcfLag(usize),
    BlockMean(usize),
    BlockMed(usize),
    BlockRms(usize),
    Block6Mean(usize),
    HalfMean(usize),
    BandPower(f64, f64),
    Zcr,
    BurstCount,
    EnvMean,
    EnvStd,
    EnvMax,
    SpectralCentroid,
    SpectralSpread,
    MedianFreq,
    PeakFreq,
    SpectralEntropy,
    TonicMean,
    TonicSlope,
    TonicMin,
    TonicMax,
    PhasicCount,
    PhasicAmpMean,
    PhasicAmpMax,
    PhasicVar,
}

impl FeatureOp {
    /// Resolves a feature name; unknown or out-of-range names are errors.
    pub fn parse(name: &str) -> Result<FeatureOp> {
        use FeatureOp::*;
        let fixed = match name {
            "hr_mean" => Some(HrMean),
            "hr_std" => Some(HrStd),
            "rri_mean" => Some(RriMean),
            "rri_std" => Some(RriStd),
            "rri_min" => Some(RriMin),
            "rri_max" => Some(RriMax),
            "rri_ratio" => Some(RriRatio),
            "rri_rmssd" => Some(RriRmssd),
            "rri_range" => Some(RriRange),
            "mean" => Some(Mean),
            "mean_abs" => Some(MeanAbs),
            "std" => Some(Std),
            "rms" => Some(Rms),
            "skewness" => Some(Skewness),
            "kurtosis" => Some(Kurtosis),
            "min" => Some(Min),
            "max" => Some(Max),
            "range" => Some(Range),
            "median" => Some(Median),
            "zcr" => Some(Zcr),
            "burst_count" => Some(BurstCount),
            "env_mean" => Some(EnvMean),
            "env_std" => Some(EnvStd),
            "env_max" => Some(EnvMax),
            "spectral_centroid" => Some(SpectralCentroid),
            "spectral_spread" => Some(SpectralSpread),
            "median_freq" => Some(MedianFreq),
            "peak_freq" => Some(PeakFreq),
            "spectral_entropy" => Some(SpectralEntropy),
            "tonic_mean" => Some(TonicMean),
            "tonic_slope" => Some(TonicSlope),
            "tonic_min" => Some(TonicMin),
            "tonic_max" => Some(TonicMax),
            "phasic_count" => Some(PhasicCount),
            "phasic_amp_mean" => Some(PhasicAmpMean),
            "phasic_amp_max" => Some(PhasicAmpMax),
            "phasic_var" => Some(PhasicVar),
            _ => None,
        };
        if let Some(op) = fixed {
            return Ok(op);
        }
        let bad = || AmserError::InvalidConfig(format!("unknown feature name `{name}`"));
        if let Some(rest) = name.strip_prefix("bp_") {
            let parts: Vec<&str> = rest.split('_').collect();
            if parts.len() == 2 {
                let lo: f64 = parts[0].parse().map_err(|_| bad())?;
                let hi: f64 = parts[1].parse().map_err(|_| bad())?;
                if lo >= 0.0 && hi > lo {
                    return Ok(BandPower(lo, hi));
                }
            }
            return Err(bad());
        }
        let blocks = (WINDOW_SECONDS / 10.0) as usize;
        if let Some(rest) = name.strip_prefix("block6_mean_") {
            let i: usize = rest.parse().map_err(|_| bad())?;
            if i < (WINDOW_SECONDS / 6.0) as usize {
                return Ok(Block6Mean(i));
            }
            return Err(bad());
        }
        if let Some(rest) = name.strip_prefix("block_mean_") {
            let i: usize = rest.parse().map_err(|_| bad())?;
            if i < blocks {
                return Ok(BlockMean(i));
            }
            return Err(bad());
        }
        if let Some(rest) = name.strip_prefix("block_med_") {
            let i: usize = rest.parse().map_err(|_| bad())?;
            if i < blocks {
                return Ok(BlockMed(i));
            }
            return Err(bad());
        }
        if let Some(rest) = name.strip_prefix("block_rms_") {
            let i: usize = rest.parse().map_err(|_| bad())?;
            if i < blocks {
                return Ok(BlockRms(i));
            }
            return Err(bad());
        }
        if let Some(rest) = name.strip_prefix("half_mean_") {
            let i: usize = rest.parse().map_err(|_| bad())?;
            if i < 2 {
                return Ok(HalfMean(i));
            }
            return Err(bad());
        }
        if let Some(rest) = name.strip_prefix("acf_lag") {
            let k: usize = rest.parse().map_err(|_| bad())?;
            if k >= 1 {
                return Ok(AcfLag(k));
            }
            return Err(bad());
        }
        if let Some(rest) = name.strip_prefix('q') {
            let p: f64 = rest.parse().map_err(|_| bad())?;
            if p > 0.0 && p < 100.0 {
                return Ok(Quantile(p));
            }
            return Err(bad());
        }
        Err(bad())
    }

    /// Whether this feature is defined for a modality.
    pub fn applies_to(&self, kind: ModalityKind) -> bool {
        use FeatureOp::*;
        match self {
            HrMean | HrStd | RriMean | RriStd | RriMin | RriMax | RriRatio | RriRmssd
            | RriRange => matches!(kind, ModalityKind::Ecg | ModalityKind::Ppg),
            BurstCount | EnvMean | EnvStd | EnvMax => kind == ModalityKind::Emg,
            TonicMean | TonicSlope | TonicMin | TonicMax | PhasicCount | PhasicAmpMean
            | PhasicAmpMax | PhasicVar => kind == ModalityKind::Eda,
            _ => true,
        }
    }

    /// Computes the value; `None` when the window did not yield the
    /// necessary intermediate (too few beats, block out of range, …).
    pub fn eval(&self, ctx: &FeatureContext) -> Option<f64> {
        use FeatureOp::*;
        let x = &ctx.filtered;
        match self {
            HrMean => ctx.rri.as_ref().map(|r| r.hr_mean_bpm),
            HrStd => ctx.rri.as_ref().map(|r| r.hr_std_bpm),
            RriMean => ctx.rri.as_ref().map(|r| r.mean_s),
            RriStd => ctx.rri.as_ref().map(|r| r.std_s),
            RriMin => ctx.rri.as_ref().map(|r| r.min_s),
            RriMax => ctx.rri.as_ref().map(|r| r.max_s),
            RriRatio => ctx.rri.as_ref().map(|r| r.ratio),
            RriRmssd => ctx.rri.as_ref().map(|r| r.rmssd_s),
            RriRange => ctx.rri.as_ref().map(|r| r.range_s),
            Mean => Some(mean(x)),
            MeanAbs => Some(x.iter().map(|v| v.abs()).sum::<f64>() / x.len() as f64),
            Std => Some(std(x)),
            Rms => Some((x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()),
            Skewness => Some(standardized_moment(x, 3)),
            Kurtosis => Some(standardized_moment(x, 4)),
            Min => Some(x.iter().cloned().fold(f64::INFINITY, f64::min)),
            Max => Some(x.iter().cloned().fold(f64::NEG_INFINITY, f64::max)),
            Range => Some(
                x.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
                    - x.iter().cloned().fold(f64::INFINITY, f64::min),
            ),
            Median => Some(quantile(x, 50.0)),
            Quantile(p) => Some(quantile(x, *p)),
            AcfLag(k) => autocorrelation(x, *k),
            BlockMean(i) => slice_stat(x, ctx.rate, 10.0, *i, mean),
            BlockMed(i) => slice_stat(x, ctx.rate, 10.0, *i, |s| quantile(s, 50.0)),
            BlockRms(i) => slice_stat(x, ctx.rate, 10.0, *i, |s| {
                (s.iter().map(|v| v * v).sum::<f64>() / s.len() as f64).sqrt()
            }),
            Block6Mean(i) => slice_stat(x, ctx.rate, 6.0, *i, mean),
            HalfMean(i) => slice_stat(x, ctx.rate, WINDOW_SECONDS / 2.0, *i, mean),
            BandPower(lo, hi) => Some(ctx.psd.band_power(*lo, *hi)),
            Zcr => Some(zero_crossing_rate(x, ctx.rate)),
            BurstCount => ctx.burst_count.map(|c| c as f64),
            EnvMean => ctx.envelope.as_ref().map(|e| mean(e)),
            EnvStd => ctx.envelope.as_ref().map(|e| std(e)),
            EnvMax => ctx
                .envelope
                .as_ref()
                .map(|e| e.iter().cloned().fold(f64::NEG_INFINITY, f64::max)),
            SpectralCentroid => Some(spectral_centroid(&ctx.psd)),
            SpectralSpread => Some(spectral_spread(&ctx.psd)),
            MedianFreq => Some(median_frequency(&ctx.psd)),
            PeakFreq => Some(peak_frequency(&ctx.psd)),
            SpectralEntropy => Some(spectral_entropy(&ctx.psd)),
            TonicMean => ctx.tonic.as_ref().map(|t| mean(t)),
            TonicSlope => ctx.tonic.as_ref().map(|t| slope_per_second(t, ctx.rate)),
            TonicMin => ctx
                .tonic
                .as_ref()
                .map(|t| t.iter().cloned().fold(f64::INFINITY, f64::min)),
            TonicMax => ctx
                .tonic
                .as_ref()
                .map(|t| t.iter().cloned().fold(f64::NEG_INFINITY, f64::max)),
            PhasicCount => ctx.scr_amplitudes.as_ref().map(|a| a.len() as f64),
            PhasicAmpMean => ctx.scr_amplitudes.as_ref().map(|a| {
                if a.is_empty() {
                    0.0
                } else {
                    mean(a)
                }
            }),
            PhasicAmpMax => ctx
                .scr_amplitudes
                .as_ref()
                .map(|a| a.iter().cloned().fold(0.0f64, f64::max)),
            PhasicVar => ctx.phasic.as_ref().map(|p| std(p).powi(2)),
        }
    }
}

pub(crate) fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

pub(crate) fn std(x: &[f64]) -> f64 {
    let m = mean(x);
    (x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / x.len() as f64).sqrt()
}

/// Skewness (order 3) or kurtosis (order 4, non-excess); zero for constant
/// input.
fn standardized_moment(x: &[f64], order: i32) -> f64 {
    let m = mean(x);
    let s = std(x);
    if s == 0.0 {
        return 0.0;
    }
    x.iter().map(|v| ((v - m) / s).powi(order)).sum::<f64>() / x.len() as f64
}

/// Nearest-rank quantile.
fn quantile(x: &[f64], p: f64) -> f64 {
    let mut sorted = x.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let rank = ((p / 100.0) * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

fn autocorrelation(x: &[f64], lag: usize) -> Option<f64> {
    if lag >= x.len() {
        return None;
    }
    let m = mean(x);
    let denom: f64 = x.iter().map(|v| (v - m).powi(2)).sum();
    if denom == 0.0 {
        return Some(0.0);
    }
    let num: f64 = x
        .windows(lag + 1)
        .map(|w| (w[0] - m) * (w[lag] - m))
        .sum();
    Some(num / denom)
}

/// Statistic over the `i`-th block of `block_s` seconds; `None` when the
/// block lies outside the window.
fn slice_stat(
    x: &[f64],
    rate: f64,
    block_s: f64,
    i: usize,
    stat: impl Fn(&[f64]) -> f64,
) -> Option<f64> {
    let block = (block_s * rate).round() as usize;
    let lo = i * block;
    if lo >= x.len() || block == 0 {
        return None;
    }
    let hi = (lo + block).min(x.len());
    Some(stat(&x[lo..hi]))
}

fn zero_crossing_rate(x: &[f64], rate: f64) -> f64 {
    let crossings = x
        .windows(2)
        .filter(|w| (w[0] >= 0.0) != (w[1] >= 0.0))
        .count();
    crossings as f64 / (x.len() as f64 / rate)
}

/// Least-squares slope in units per second.
fn slope_per_second(x: &[f64], rate: f64) -> f64 {
    let n = x.len() as f64;
    let tm = (n - 1.0) / 2.0;
    let xm = mean(x);
    let mut num = 0.0;
    let mut den = 0.0;
    for (i, v) in x.iter().enumerate() {
        let dt = i as f64 - tm;
        num += dt * (v - xm);
        den += dt * dt;
    }
    if den == 0.0 {
        0.0
    } else {
        num / den * rate
    }
}

fn spectral_centroid(psd: &Psd) -> f64 {
    let total: f64 = psd.power.iter().sum();
    if total == 0.0 {
        return 0.0;
    }
    psd.freqs
        .iter()
        .zip(&psd.power)
        .map(|(f, p)| f * p)
        .sum::<f64>()
        / total
}

fn spectral_spread(psd: &Psd) -> f64 {
    let total: f64 = psd.power.iter().sum();
    if total == 0.0 {
        return 0.0;
    }
    let c = spectral_centroid(psd);
    (psd.freqs
        .iter()
        .zip(&psd.power)
        .map(|(f, p)| (f - c).powi(2) * p)
        .sum::<f64>()
        / total)
        .sqrt()
}

fn median_frequency(psd: &Psd) -> f64 {
    let total: f64 = psd.power.iter().sum();
    if total == 0.0 {
        return 0.0;
    }
    let mut acc = 0.0;
    for (f, p) in psd.freqs.iter().zip(&psd.power) {
        acc += p;
        if acc >= total / 2.0 {
            return *f;
        }
    }
    *psd.freqs.last().unwrap()
}

fn peak_frequency(psd: &Psd) -> f64 {
    psd.freqs[psd
        .power
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .map(|(i, _)| i)
        .unwrap_or(0)]
}

/// Shannon entropy of the normalized spectrum, in nats.
fn spectral_entropy(psd: &Psd) -> f64 {
    let total: f64 = psd.power.iter().sum();
    if total == 0.0 {
        return 0.0;
    }
    -psd.power
        .iter()
        .filter(|p| **p > 0.0)
        .map(|p| {
            let q = p / total;
            q * q.ln()
        })
        .sum::<f64>()
}

/// Centered moving average; the window shrinks near the edges.
fn moving_average(x: &[f64], width: usize) -> Vec<f64> {
    windowed(x, width, mean)
}

/// Centered moving RMS; the window shrinks near the edges.
fn moving_rms(x: &[f64], width: usize) -> Vec<f64> {
    windowed(x, width, |s| {
        (s.iter().map(|v| v * v).sum::<f64>() / s.len() as f64).sqrt()
    })
}

fn windowed(x: &[f64], width: usize, stat: impl Fn(&[f64]) -> f64) -> Vec<f64> {
    let half = (width / 2).max(1);
    (0..x.len())
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half).min(x.len());
            stat(&x[lo..hi])
        })
        .collect()
}

/// Counts envelope excursions above half the 95th-percentile level,
/// requiring 0.3 s between burst onsets.
fn count_bursts(envelope: &[f64], rate: f64) -> usize {
    if envelope.is_empty() {
        return 0;
    }
    let threshold = 0.5 * quantile(envelope, 95.0);
    let min_gap = (0.3 * rate).round() as usize;
    let mut count = 0;
    let mut last_onset: Option<usize> = None;
    for i in 1..envelope.len() {
        if envelope[i - 1] <= threshold && envelope[i] > threshold {
            if last_onset.is_none_or(|l| i - l >= min_gap) {
                count += 1;
            }
            last_onset = Some(i);
        }
    }
    count
}

/// Amplitudes of phasic local maxima at least `min_amp` tall, with a 1 s
/// refractory period (the taller of two close candidates wins).
fn scr_peaks(phasic: &[f64], rate: f64, min_amp: f64) -> Vec<f64> {
    let refractory = (1.0 * rate).round() as usize;
    let mut peaks: Vec<usize> = Vec::new();
    for i in 1..phasic.len().saturating_sub(1) {
        if !(phasic[i - 1] < phasic[i] && phasic[i] >= phasic[i + 1]) || phasic[i] < min_amp {
            continue;
        }
        match peaks.last() {
            Some(&last) if i - last < refractory => {
                if phasic[i] > phasic[last] {
                    *peaks.last_mut().unwrap() = i;
                }
            }
            _ => peaks.push(i),
        }
    }
    peaks.into_iter().map(|i| phasic[i]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signals::{synth, SynthParams};

    fn pain_catalog() -> FeatureCatalog {
        let cat: FeatureCatalog =
            serde_json::from_str(include_str!("../configs/pain.catalog.json")).unwrap();
        cat.validate().unwrap();
        cat
    }

    fn stress_catalog() -> FeatureCatalog {
        let cat: FeatureCatalog =
            serde_json::from_str(include_str!("../configs/stress.catalog.json")).unwrap();
        cat.validate().unwrap();
        cat
    }

    /// The three-modality configuration used to size the worked fusion
    /// examples: the pain catalog without the muscle channel, with a
    /// 12-feature cardiac subset.
    fn motivation_catalog() -> FeatureCatalog {
        let pain = pain_catalog();
        let ecg = pain.modality(ModalityKind::Ecg).unwrap();
        let catalog = FeatureCatalog {
            application: Application::Pain,
            modalities: vec![
                ModalityCatalog {
                    kind: ModalityKind::Ecg,
                    features: ecg.features.clone(),
                    uncertain_subset: ecg.features[..12].to_vec(),
                },
                pain.modality(ModalityKind::Ppg).unwrap().clone(),
                pain.modality(ModalityKind::Eda).unwrap().clone(),
            ],
        };
        catalog
    }

    fn window(kind: ModalityKind, seed: u64) -> SignalWindow {
        let params = SynthParams {
            seed,
            hrv_rel: 0.02,
            ..SynthParams::default()
        };
        synth(kind, &params, &Application::Pain.sensor_spec(kind)).unwrap()
    }

    #[test]
    fn shipped_catalogs_have_the_designed_shapes() {
        let pain = pain_catalog();
        let counts: Vec<(usize, usize)> = pain
            .modalities
            .iter()
            .map(|m| (m.features.len(), m.uncertain_subset.len()))
            .collect();
        assert_eq!(counts, vec![(52, 9), (60, 55), (42, 31), (42, 30)]);
        assert_eq!(pain.total_full(), 196);

        let stress = stress_catalog();
        let counts: Vec<(usize, usize)> = stress
            .modalities
            .iter()
            .map(|m| (m.features.len(), m.uncertain_subset.len()))
            .collect();
        assert_eq!(counts, vec![(26, 15), (17, 12), (42, 37)]);
        assert_eq!(stress.total_full(), 85);
    }

    #[test]
    fn retention_ratios_are_exact_rationals() {
        let pain = pain_catalog();
        let mut masks = pain.full_masks();
        for m in masks.values_mut() {
            *m = FeatureMask::Subset;
        }
        assert_eq!(pain.retained_count(&masks), 125);
        assert_eq!(pain.retention(&masks), Ratio::new(125, 196));

        let stress = stress_catalog();
        let masks: BTreeMap<ModalityKind, FeatureMask> = [
            (ModalityKind::Ecg, FeatureMask::Empty),
            (ModalityKind::Ppg, FeatureMask::Subset),
            (ModalityKind::Eda, FeatureMask::Empty),
        ]
        .into();
        assert_eq!(stress.retained_count(&masks), 12);
        assert_eq!(stress.retention(&masks), Ratio::new(12, 85));
    }

    #[test]
    fn ecg_extraction_recovers_heart_rate_features() {
        let pain = pain_catalog();
        let w = window(ModalityKind::Ecg, 21);
        let v = extract(&w, &pain).unwrap();
        assert_eq!(v.values.len(), 52);
        assert!(v.valid);
        // hr_mean is the first catalog feature.
        assert!(
            (v.values[0] - 60.0).abs() < 2.0,
            "hr_mean {} for a 60 bpm window",
            v.values[0]
        );
    }

    #[test]
    fn eda_extraction_recovers_tonic_and_event_features() {
        let pain = pain_catalog();
        let w = window(ModalityKind::Eda, 22);
        let v = extract(&w, &pain).unwrap();
        assert_eq!(v.values.len(), 42);
        let names = &pain.modality(ModalityKind::Eda).unwrap().features;
        let at = |n: &str| v.values[names.iter().position(|x| x == n).unwrap()];
        assert!(
            (at("tonic_mean") - 2.0).abs() < 0.15,
            "tonic_mean {}",
            at("tonic_mean")
        );
        let count = at("phasic_count");
        assert!(
            (2.0..=4.0).contains(&count),
            "phasic_count {count} for 3 responses/min"
        );
    }

    #[test]
    fn emg_extraction_counts_bursts() {
        let pain = pain_catalog();
        let w = window(ModalityKind::Emg, 23);
        let v = extract(&w, &pain).unwrap();
        assert_eq!(v.values.len(), 60);
        let names = &pain.modality(ModalityKind::Emg).unwrap().features;
        let count = v.values[names.iter().position(|x| x == "burst_count").unwrap()];
        assert!(
            (8.0..=16.0).contains(&count),
            "burst_count {count} for 12 bursts/min"
        );
    }

    #[test]
    fn unusable_cardiac_window_zeroes_beat_features_and_flags_the_vector() {
        let pain = pain_catalog();
        // A flat window yields no detectable beats.
        let spec = Application::Pain.sensor_spec(ModalityKind::Ecg);
        let n = spec.samples_per_channel();
        let w = SignalWindow {
            kind: ModalityKind::Ecg,
            sample_rate: spec.sample_rate,
            channels: vec![vec![0.0; n], vec![0.0; n]],
            duration_s: WINDOW_SECONDS,
            window_index: 0,
            truth_event_times: vec![],
        };
        let v = extract(&w, &pain).unwrap();
        assert!(!v.valid);
        assert_eq!(&v.values[..9], &[0.0; 9]);
    }

    #[test]
    fn fusion_orders_and_sizes_follow_the_catalog() {
        let catalog = motivation_catalog();
        catalog.validate().unwrap();
        assert_eq!(catalog.total_full(), 136);

        let parts: BTreeMap<ModalityKind, FeatureVector> = catalog
            .kinds()
            .into_iter()
            .map(|k| (k, extract(&window(k, 31), &catalog).unwrap()))
            .collect();

        let full = fuse(&catalog, &parts, &catalog.full_masks()).unwrap();
        assert_eq!(full.values.len(), 136);
        // Fusion order is fixed: cardiac, pulse, electrodermal.
        assert_eq!(&full.values[..52], &parts[&ModalityKind::Ecg].values[..]);
        assert_eq!(
            &full.values[52..94],
            &parts[&ModalityKind::Ppg].values[..]
        );

        let mut masks = catalog.full_masks();
        masks.insert(ModalityKind::Ecg, FeatureMask::Subset);
        let reduced = fuse(&catalog, &parts, &masks).unwrap();
        assert_eq!(reduced.values.len(), 96);
        assert_eq!(&reduced.values[..12], &parts[&ModalityKind::Ecg].values[..12]);
    }

    #[test]
    fn fusing_a_masked_in_modality_without_a_vector_fails() {
        let catalog = pain_catalog();
        let parts: BTreeMap<ModalityKind, FeatureVector> = BTreeMap::new();
        let err = fuse(&catalog, &parts, &catalog.full_masks()).unwrap_err();
        assert!(matches!(err, AmserError::InvalidMask(_)), "{err}");
    }

    #[test]
    fn subset_projection_matches_manual_indexing() {
        let catalog = pain_catalog();
        let w = window(ModalityKind::Eda, 33);
        let v = extract(&w, &catalog).unwrap();
        let parts: BTreeMap<ModalityKind, FeatureVector> =
            [(ModalityKind::Eda, v.clone())].into();
        let masks: BTreeMap<ModalityKind, FeatureMask> =
            [(ModalityKind::Eda, FeatureMask::Subset)].into();
        let fused = fuse(&catalog, &parts, &masks).unwrap();
        assert_eq!(fused.values.len(), 30);
        assert_eq!(&fused.values[..], &v.values[..30]);
    }

    #[test]
    fn unknown_and_malformed_names_are_rejected() {
        for bad in ["wavelet_energy", "q0", "q100", "bp_5", "bp_8_2", "block_mean_6", "acf_lag0"] {
            assert!(FeatureOp::parse(bad).is_err(), "`{bad}` should not parse");
        }
        for good in ["q25", "bp_0.5_2", "block6_mean_9", "acf_lag1", "half_mean_1"] {
            assert!(FeatureOp::parse(good).is_ok(), "`{good}` should parse");
        }
    }

    #[test]
    fn catalog_validation_rejects_structural_problems() {
        let mut cat = pain_catalog();
        // Subset out of order.
        cat.modalities[0].uncertain_subset = vec!["hr_std".into(), "hr_mean".into()];
        assert!(cat.validate().is_err());

        let mut cat = pain_catalog();
        // Cardiac feature on the electrodermal channel.
        cat.modalities[3].features.push("hr_mean".into());
        assert!(cat.validate().is_err());

        let mut cat = pain_catalog();
        cat.modalities.swap(0, 1);
        assert!(cat.validate().is_err(), "re-ordered modalities must fail");

        let mut cat = pain_catalog();
        cat.modalities.clear();
        assert!(cat.validate().is_err(), "empty catalog must fail");

        // Omitting a sensor while preserving order is allowed.
        let mut cat = pain_catalog();
        cat.modalities.remove(1);
        assert!(cat.validate().is_ok(), "ordered subset must validate");
    }
}

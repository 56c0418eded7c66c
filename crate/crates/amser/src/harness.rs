//! Scenario presets, the closed-loop window runner, and suite reports.
//!
//! A scenario describes what the world does to each modality — which noise
//! lands on which sensor, and for how long. The runner then plays the full
//! loop one 60-second window at a time:
//!
//! 1. sensors acquire under the configuration chosen at the previous
//!    window (everything starts powered);
//! 2. the monitor labels every acquired modality, and labels of powered-down
//!    sensors carry over unchanged;
//! 3. the controller turns labels into a sensing configuration, feature
//!    masks, and a model key;
//! 4. the window's own fusion uses the fresh masks restricted to what was
//!    actually acquired, while the sensing change takes effect next window;
//! 5. costs are charged for what ran: powered sensors, probe wake-ups,
//!    retained features through the selected model.
//!
//! Disabled sensors are re-powered on every fifth window to check for
//! recovery; those probe acquisitions update labels but never join fusion,
//! and probe windows are excluded from steady-state cost summaries so the
//! recovery machinery does not blur the per-window operating cost.
//!
//! Every run also carries a shadow baseline — all sensors on, full feature
//! set, the everything-on model — over the *same* noisy windows, which is
//! what accuracy and cost comparisons are made against.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config;
use crate::controller::{
    decide, is_probe_window, reconfigure, ControlDecision, ModelKey, SensingConfig,
    SensorCommand, RECHECK_PERIOD_DEFAULT,
};
use crate::cost::{window_cost, AppCalibration, Calibration, VolumeMode, WindowCost};
use crate::error::{AmserError, Result};
use crate::features::{
    extract_from_context, fuse, FeatureCatalog, FeatureContext, FeatureMask, FeatureVector,
};
use crate::models::{class_count, class_params, expand_for_fallback, ModelPool};
use crate::monitor::{
    assess_with_context, MonitorConfig, QualityAssessment, QualityLabel,
};
use crate::noise::{inject_all, NoiseKind, NoiseSpec};
use crate::signals::{
    derive_rng, fnv1a64, synth, Application, ModalityKind, SensorStatus, SignalWindow,
};

/// Format tag expected in `presets.json`.
pub const PRESETS_FORMAT: &str = "amser-presets-v1";

/// Acceptable distance from a published volume percentage, in percentage
/// points.
pub const VOLUME_TOLERANCE_PP: f64 = 0.5;

/// Acceptable relative error against a published reduction factor.
pub const REDUCTION_TOLERANCE: f64 = 0.01;

/// Acceptable relative error against a published cost gain.
pub const GAIN_TOLERANCE: f64 = 0.15;

/// One noise component applied to a modality, scaled against the clean
/// window independently of the other components.
///
/// Two equal-power components therefore land 3 dB below their individual
/// targets combined: a pair at 13 dB yields a 10 dB window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoisePlanEntry {
    pub kind: NoiseKind,
    pub target_snr_db: f64,
    /// Transients per minute; the injector default when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub burst_density: Option<u32>,
}

/// A runnable scenario: which noise lands on which modality, and until
/// when.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub application: Application,
    pub name: String,
    /// Noise plan per modality; absent modalities stay clean.
    #[serde(default)]
    pub noise: BTreeMap<ModalityKind, Vec<NoisePlanEntry>>,
    /// When set, windows at or past this index are clean — the knob for
    /// recovery demonstrations. `None` keeps the noise on forever.
    #[serde(default)]
    pub noise_until_window: Option<u32>,
}

#[derive(Deserialize)]
struct PresetsFile {
    format: String,
    presets: Vec<ScenarioSpec>,
}

impl ScenarioSpec {
    /// All bundled presets, in file order.
    pub fn presets() -> Result<Vec<ScenarioSpec>> {
        let file: PresetsFile = serde_json::from_str(&config::read_config("presets.json")?)?;
        if file.format != PRESETS_FORMAT {
            return Err(AmserError::InvalidConfig(format!(
                "unsupported presets format `{}`",
                file.format
            )));
        }
        for preset in &file.presets {
            preset.validate()?;
        }
        Ok(file.presets)
    }

    /// The bundled preset with the given name.
    ///
    /// # Arguments
    ///
    /// * `application` - Which application's preset family to search.
    /// * `name` - Preset name such as `"S3"`.
    pub fn preset(application: Application, name: &str) -> Result<ScenarioSpec> {
        Self::presets()?
            .into_iter()
            .find(|p| p.application == application && p.name == name)
            .ok_or_else(|| {
                AmserError::MissingResource(format!("no {application} preset named `{name}`"))
            })
    }

    /// Parses a scenario from a JSON file.
    pub fn from_file(path: &Path) -> Result<ScenarioSpec> {
        let spec: ScenarioSpec = serde_json::from_str(&fs::read_to_string(path)?)?;
        spec.validate()?;
        Ok(spec)
    }

    /// Structural checks: known modalities, finite targets, usable burst
    /// densities.
    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() {
            return Err(AmserError::InvalidConfig("scenario name is empty".into()));
        }
        for (&kind, entries) in &self.noise {
            if !self.application.modalities().contains(&kind) {
                return Err(AmserError::InvalidConfig(format!(
                    "{} has no {kind} modality",
                    self.application
                )));
            }
            for entry in entries {
                if !entry.target_snr_db.is_finite() {
                    return Err(AmserError::InvalidConfig(format!(
                        "non-finite noise target for {kind}"
                    )));
                }
                if entry.kind == NoiseKind::Ma && entry.burst_density == Some(0) {
                    return Err(AmserError::InvalidConfig(format!(
                        "zero-burst transient noise for {kind} produces nothing"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Materializes the noise plan for one modality of one window, with
    /// seeds derived from the run seed so every window draws a fresh
    /// realization.
    pub fn noise_specs(
        &self,
        kind: ModalityKind,
        run_seed: u64,
        window_index: u32,
    ) -> Vec<NoiseSpec> {
        if let Some(until) = self.noise_until_window {
            if window_index >= until {
                return Vec::new();
            }
        }
        let Some(entries) = self.noise.get(&kind) else {
            return Vec::new();
        };
        entries
            .iter()
            .enumerate()
            .map(|(i, entry)| {
                let seed = fnv1a64(
                    format!("{}/{run_seed}/{window_index}/{kind}/{i}", self.name).as_bytes(),
                );
                let mut spec = match entry.kind {
                    NoiseKind::Bw => NoiseSpec::bw(entry.target_snr_db, seed),
                    NoiseKind::Ma => NoiseSpec::ma(entry.target_snr_db, seed),
                };
                if let Some(density) = entry.burst_density {
                    spec.burst_density = density;
                }
                spec
            })
            .collect()
    }
}

/// Everything that happened in one window of one seeded run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowRecord {
    pub seed: u64,
    pub window_index: u32,
    /// Whether disabled sensors were briefly re-powered this window.
    pub probe: bool,
    pub truth_class: usize,
    /// Modalities that actually acquired data (powered or probed).
    pub sensed: Vec<ModalityKind>,
    /// Fresh quality assessments for the sensed modalities.
    pub assessments: BTreeMap<ModalityKind, QualityAssessment>,
    /// The controller's output for this window's labels.
    pub decision: ControlDecision,
    /// Masks actually used for this window's fusion: the decision masks
    /// restricted to modalities powered for regular acquisition.
    pub fusion_masks: BTreeMap<ModalityKind, FeatureMask>,
    /// Canonical key of the model that ran, when one did.
    pub model_key: Option<String>,
    /// Selection note when an exact model was missing and a fallback ran.
    pub fallback_note: Option<String>,
    pub predicted_class: Option<usize>,
    pub baseline_class: usize,
    pub cost: WindowCost,
    pub baseline_cost: WindowCost,
    /// Sensor transitions issued at the end of this window.
    pub commands: Vec<SensorCommand>,
}

/// Accuracy of one seeded run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeedStats {
    pub seed: u64,
    pub adaptive_accuracy: f64,
    pub baseline_accuracy: f64,
}

/// Mean per-window costs over a set of windows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostSummary {
    pub windows: usize,
    pub sensor_energy: f64,
    pub edge_energy: f64,
    pub latency_ms: f64,
    pub data_volume_bytes: f64,
    pub retained_features: f64,
}

impl CostSummary {
    fn from_costs(costs: &[WindowCost]) -> Option<CostSummary> {
        if costs.is_empty() {
            return None;
        }
        let n = costs.len() as f64;
        Some(CostSummary {
            windows: costs.len(),
            sensor_energy: costs.iter().map(|c| c.sensor_energy).sum::<f64>() / n,
            edge_energy: costs.iter().map(|c| c.edge_energy).sum::<f64>() / n,
            latency_ms: costs.iter().map(|c| c.latency_ms).sum::<f64>() / n,
            data_volume_bytes: costs.iter().map(|c| c.data_volume_bytes as f64).sum::<f64>()
                / n,
            retained_features: costs.iter().map(|c| c.retained_features as f64).sum::<f64>()
                / n,
        })
    }
}

/// Baseline-over-adaptive ratios of the steady-state costs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GainReport {
    pub sensor_gain: f64,
    pub edge_gain: f64,
    pub speedup: f64,
    /// Adaptive transmitted volume as a percentage of the baseline's.
    pub volume_pct: f64,
    /// Baseline-over-adaptive retained feature count; `None` when the
    /// adaptive loop retained nothing.
    pub reduction: Option<f64>,
}

/// One-sided paired t-test of adaptive minus baseline accuracy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTestReport {
    pub pairs: usize,
    pub mean_difference: f64,
    pub std_difference: f64,
    pub t_statistic: f64,
    pub degrees_of_freedom: usize,
    /// One-sided critical value at the 5 % level.
    pub t_critical: f64,
    /// Whether the adaptive loop is significantly more accurate.
    pub significant: bool,
}

/// Full record of a scenario run: every window of every seed, plus
/// aggregates that are all recomputable from the per-window records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub application: Application,
    pub scenario: String,
    pub spec: ScenarioSpec,
    pub seeds: Vec<u64>,
    pub n_windows: u32,
    pub recheck_period: u32,
    /// All windows, in seed order then window order.
    pub windows: Vec<WindowRecord>,
    pub seed_stats: Vec<SeedStats>,
    pub adaptive_accuracy: f64,
    pub baseline_accuracy: f64,
    /// Mean costs over non-probe windows after the first, where the loop
    /// runs its settled configuration.
    pub steady: Option<CostSummary>,
    pub baseline_steady: Option<CostSummary>,
    pub gains: Option<GainReport>,
    pub paired_t: Option<TTestReport>,
    /// SHA-256 of every configuration file as loaded for this run.
    pub config_digests: BTreeMap<String, String>,
}

/// One-sided 5 % critical value of Student's t distribution.
///
/// Exact for 1–30 degrees of freedom, the normal limit beyond.
pub fn paired_t_critical(degrees_of_freedom: usize) -> f64 {
    const TABLE: [f64; 30] = [
        6.3138, 2.9200, 2.3534, 2.1318, 2.0150, 1.9432, 1.8946, 1.8595, 1.8331, 1.8125,
        1.7959, 1.7823, 1.7709, 1.7613, 1.7531, 1.7459, 1.7396, 1.7341, 1.7291, 1.7247,
        1.7207, 1.7171, 1.7139, 1.7109, 1.7081, 1.7056, 1.7033, 1.7011, 1.6991, 1.6973,
    ];
    match degrees_of_freedom {
        0 => f64::INFINITY,
        d if d <= TABLE.len() => TABLE[d - 1],
        _ => 1.6449,
    }
}

/// One-sided paired t-test on per-seed differences; `None` below two
/// pairs.
///
/// A zero-variance difference vector cannot produce a finite statistic, so
/// the statistic saturates at ±1e12 with the sign of the mean — keeping
/// reports JSON-serializable while preserving the verdict.
pub fn paired_t_test(differences: &[f64]) -> Option<TTestReport> {
    let n = differences.len();
    if n < 2 {
        return None;
    }
    let mean = differences.iter().sum::<f64>() / n as f64;
    let var = differences.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let sd = var.sqrt();
    let t = if sd > 0.0 {
        mean / (sd / (n as f64).sqrt())
    } else if mean == 0.0 {
        0.0
    } else {
        1e12 * mean.signum()
    };
    let degrees_of_freedom = n - 1;
    let t_critical = paired_t_critical(degrees_of_freedom);
    Some(TTestReport {
        pairs: n,
        mean_difference: mean,
        std_difference: sd,
        t_statistic: t,
        degrees_of_freedom,
        t_critical,
        significant: t > t_critical,
    })
}

/// Runs one scenario over several seeds and aggregates the results.
///
/// # Arguments
///
/// * `spec` - The scenario to play.
/// * `pool` - Trained models for the scenario's application.
/// * `catalog` - Feature catalog the pool was trained against.
/// * `calibration` - Cost model (all applications; the right one is picked).
/// * `seeds` - One closed-loop run per seed, each over fresh signals.
/// * `n_windows` - Windows per run.
pub fn run_scenario(
    spec: &ScenarioSpec,
    pool: &ModelPool,
    catalog: &FeatureCatalog,
    calibration: &Calibration,
    seeds: &[u64],
    n_windows: u32,
) -> Result<RunReport> {
    spec.validate()?;
    if seeds.is_empty() {
        return Err(AmserError::InvalidParam("need at least one seed".into()));
    }
    if n_windows == 0 {
        return Err(AmserError::InvalidParam("need at least one window".into()));
    }
    if catalog.application != spec.application || pool.application != spec.application {
        return Err(AmserError::InvalidParam(format!(
            "scenario is for {}, but catalog or pool is not",
            spec.application
        )));
    }
    let app_calibration = calibration.for_application(spec.application)?;
    let monitor_config = config::load_monitor_config()?;
    let recheck_period = RECHECK_PERIOD_DEFAULT;

    let per_seed: Result<Vec<(Vec<WindowRecord>, SeedStats)>> = seeds
        .par_iter()
        .map(|&seed| {
            run_seed(
                spec,
                pool,
                catalog,
                app_calibration,
                &monitor_config,
                seed,
                n_windows,
                recheck_period,
            )
        })
        .collect();
    let per_seed = per_seed?;

    let mut windows = Vec::with_capacity(seeds.len() * n_windows as usize);
    let mut seed_stats = Vec::with_capacity(seeds.len());
    for (records, stats) in per_seed {
        windows.extend(records);
        seed_stats.push(stats);
    }

    let steady_costs: Vec<WindowCost> = windows
        .iter()
        .filter(|w| w.window_index >= 1 && !w.probe)
        .map(|w| w.cost)
        .collect();
    let baseline_costs: Vec<WindowCost> = windows
        .iter()
        .filter(|w| w.window_index >= 1 && !w.probe)
        .map(|w| w.baseline_cost)
        .collect();
    let steady = CostSummary::from_costs(&steady_costs);
    let baseline_steady = CostSummary::from_costs(&baseline_costs);
    let gains = match (&steady, &baseline_steady) {
        (Some(a), Some(b))
            if a.sensor_energy > 0.0
                && a.edge_energy > 0.0
                && a.latency_ms > 0.0
                && a.data_volume_bytes > 0.0 =>
        {
            Some(GainReport {
                sensor_gain: b.sensor_energy / a.sensor_energy,
                edge_gain: b.edge_energy / a.edge_energy,
                speedup: b.latency_ms / a.latency_ms,
                volume_pct: 100.0 * a.data_volume_bytes / b.data_volume_bytes,
                reduction: (a.retained_features > 0.0)
                    .then(|| b.retained_features / a.retained_features),
            })
        }
        _ => None,
    };

    let n = seed_stats.len() as f64;
    let adaptive_accuracy = seed_stats.iter().map(|s| s.adaptive_accuracy).sum::<f64>() / n;
    let baseline_accuracy = seed_stats.iter().map(|s| s.baseline_accuracy).sum::<f64>() / n;
    let differences: Vec<f64> = seed_stats
        .iter()
        .map(|s| s.adaptive_accuracy - s.baseline_accuracy)
        .collect();
    let paired_t = paired_t_test(&differences);

    let mut config_digests = BTreeMap::new();
    for name in config::config_names() {
        config_digests.insert(name.to_string(), config::config_sha256(name)?);
    }

    Ok(RunReport {
        application: spec.application,
        scenario: spec.name.clone(),
        spec: spec.clone(),
        seeds: seeds.to_vec(),
        n_windows,
        recheck_period,
        windows,
        seed_stats,
        adaptive_accuracy,
        baseline_accuracy,
        steady,
        baseline_steady,
        gains,
        paired_t,
        config_digests,
    })
}

/// Plays the closed loop for one seed.
#[allow(clippy::too_many_arguments)]
fn run_seed(
    spec: &ScenarioSpec,
    pool: &ModelPool,
    catalog: &FeatureCatalog,
    calibration: &AppCalibration,
    monitor_config: &MonitorConfig,
    seed: u64,
    n_windows: u32,
    recheck_period: u32,
) -> Result<(Vec<WindowRecord>, SeedStats)> {
    let application = spec.application;
    let kinds = catalog.kinds();
    let classes = class_count(application);
    let mut class_rng = derive_rng(seed, "harness-classes");
    let truth: Vec<usize> = (0..n_windows)
        .map(|_| class_rng.gen_range(0..classes))
        .collect();

    let full_masks = catalog.full_masks();
    let full_key = ModelKey::from_masks(application, &kinds, &full_masks);
    let baseline_model = pool.select(&full_key)?;
    let total_features = catalog.total_full();

    let mut sensing = SensingConfig::all_on(&kinds);
    let mut carried: BTreeMap<ModalityKind, QualityLabel> = BTreeMap::new();
    let mut records = Vec::with_capacity(n_windows as usize);
    let mut adaptive_hits = 0usize;
    let mut baseline_hits = 0usize;

    for k in 0..n_windows {
        let probe = is_probe_window(k, recheck_period);
        let truth_class = truth[k as usize];

        // The world: every modality exists whether or not it is sensed, so
        // the shadow baseline sees exactly the same windows.
        let mut params_rng = derive_rng(seed, &format!("harness-window-{k}"));
        let params = class_params(truth_class, &mut params_rng);
        let mut contexts: BTreeMap<ModalityKind, FeatureContext> = BTreeMap::new();
        let mut vectors: BTreeMap<ModalityKind, FeatureVector> = BTreeMap::new();
        let mut raw: BTreeMap<ModalityKind, SignalWindow> = BTreeMap::new();
        for &kind in &kinds {
            let sensor = application.sensor_spec(kind);
            let mut window = synth(kind, &params, &sensor)?;
            window.window_index = k;
            let noise = spec.noise_specs(kind, seed, k);
            if !noise.is_empty() {
                window = inject_all(&window, &noise)?;
            }
            let ctx = FeatureContext::from_window(&window)?;
            vectors.insert(kind, extract_from_context(&ctx, k, catalog)?);
            contexts.insert(kind, ctx);
            raw.insert(kind, window);
        }

        // Monitor what was acquired; powered-down labels carry over.
        let sensed: Vec<ModalityKind> = kinds
            .iter()
            .copied()
            .filter(|&m| sensing.is_on(m) || probe)
            .collect();
        let mut assessments = BTreeMap::new();
        for &kind in &sensed {
            let assessment = assess_with_context(
                &raw[&kind],
                &contexts[&kind],
                SensorStatus::Attached,
                monitor_config,
            )?;
            carried.insert(kind, assessment.label);
            assessments.insert(kind, assessment);
        }

        let decision = decide(catalog, &carried)?;

        // Fusion uses the fresh masks, but only over regular acquisitions —
        // probe data stays out of inference.
        let mut fusion_masks = BTreeMap::new();
        for &kind in &kinds {
            let mask = if sensing.is_on(kind) {
                decision.masks[&kind]
            } else {
                FeatureMask::Empty
            };
            fusion_masks.insert(kind, mask);
        }
        let fusion_key = fusion_masks
            .values()
            .any(|&m| m != FeatureMask::Empty)
            .then(|| ModelKey::from_masks(application, &kinds, &fusion_masks));
        let (model_key, fallback_note, predicted_class) = match &fusion_key {
            None => (None, None, None),
            Some(key) => {
                let selected = pool.select(key)?;
                let mut fused = fuse(catalog, &vectors, &fusion_masks)?;
                if selected.model.key != *key {
                    fused = expand_for_fallback(catalog, key, &selected.model.key, &fused)?;
                }
                let prediction = selected.model.infer(&fused)?;
                (
                    Some(key.canonical()),
                    selected.note.clone(),
                    Some(prediction.class),
                )
            }
        };

        let baseline_fused = fuse(catalog, &vectors, &full_masks)?;
        let baseline_class = baseline_model.model.infer(&baseline_fused)?.class;

        let cost = window_cost(
            application,
            calibration,
            catalog.retained_count(&fusion_masks),
            &sensed,
            fusion_key.as_ref(),
            VolumeMode::Features,
        )?;
        let baseline_cost = window_cost(
            application,
            calibration,
            total_features,
            &kinds,
            Some(&full_key),
            VolumeMode::Features,
        )?;

        adaptive_hits += (predicted_class == Some(truth_class)) as usize;
        baseline_hits += (baseline_class == truth_class) as usize;

        let commands = reconfigure(&sensing, &decision.sensing);
        let next_sensing = decision.sensing.clone();
        records.push(WindowRecord {
            seed,
            window_index: k,
            probe,
            truth_class,
            sensed,
            assessments,
            decision,
            fusion_masks,
            model_key,
            fallback_note,
            predicted_class,
            baseline_class,
            cost,
            baseline_cost,
            commands,
        });
        sensing = next_sensing;
    }

    let stats = SeedStats {
        seed,
        adaptive_accuracy: adaptive_hits as f64 / n_windows as f64,
        baseline_accuracy: baseline_hits as f64 / n_windows as f64,
    };
    Ok((records, stats))
}

/// One value checked against its published expectation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuiteCheck {
    pub value: f64,
    pub expected: f64,
    pub ok: bool,
}

fn check_abs(value: f64, expected: f64, tolerance: f64) -> SuiteCheck {
    SuiteCheck {
        value,
        expected,
        ok: (value - expected).abs() <= tolerance,
    }
}

fn check_rel(value: f64, expected: f64, tolerance: f64) -> SuiteCheck {
    SuiteCheck {
        value,
        expected,
        ok: expected != 0.0 && (value / expected - 1.0).abs() <= tolerance,
    }
}

/// One scenario's results compared against the published expectations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteRow {
    pub scenario: String,
    /// Settled labels: the final window's decision, identical across seeds
    /// when `decisions_match` holds.
    pub labels: BTreeMap<ModalityKind, QualityLabel>,
    pub expected_labels: BTreeMap<ModalityKind, QualityLabel>,
    /// Whether every seed settled on the expected labels.
    pub decisions_match: bool,
    pub volume_pct: SuiteCheck,
    pub reduction: Option<SuiteCheck>,
    pub sensor_gain: SuiteCheck,
    pub edge_gain: SuiteCheck,
    pub speedup: SuiteCheck,
    pub adaptive_accuracy: f64,
    pub baseline_accuracy: f64,
    pub pass: bool,
}

/// Results of running every preset of one application against the
/// published expectations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub application: Application,
    pub seeds: Vec<u64>,
    pub n_windows: u32,
    pub rows: Vec<SuiteRow>,
    pub all_pass: bool,
}

/// Runs every preset scenario of an application and checks decisions,
/// volumes, reductions, and cost gains against the published expectations.
pub fn run_suite(
    application: Application,
    pool: &ModelPool,
    catalog: &FeatureCatalog,
    calibration: &Calibration,
    seeds: &[u64],
    n_windows: u32,
) -> Result<SuiteReport> {
    let targets = config::load_targets()?;
    let targets = targets.for_application(application)?;
    let kinds = catalog.kinds();
    let mut rows = Vec::with_capacity(targets.scenario_names.len());
    for (i, name) in targets.scenario_names.iter().enumerate() {
        let spec = ScenarioSpec::preset(application, name)?;
        let report = run_scenario(&spec, pool, catalog, calibration, seeds, n_windows)?;

        let expected_labels: BTreeMap<ModalityKind, QualityLabel> = kinds
            .iter()
            .copied()
            .zip(targets.labels[i].iter().copied())
            .collect();
        let mut decisions_match = true;
        let mut labels = expected_labels.clone();
        for &seed in seeds {
            let last = report
                .windows
                .iter()
                .filter(|w| w.seed == seed)
                .last()
                .expect("every seed has windows");
            if last.decision.labels != expected_labels {
                decisions_match = false;
            }
            labels = last.decision.labels.clone();
        }

        let gains = report.gains.ok_or_else(|| {
            AmserError::DegenerateInput(format!(
                "scenario {name} produced no steady-state windows to compare"
            ))
        })?;
        let volume_pct = check_abs(gains.volume_pct, targets.volumes_pct[i], VOLUME_TOLERANCE_PP);
        let reduction = gains
            .reduction
            .map(|r| check_rel(r, targets.reductions[i], REDUCTION_TOLERANCE));
        let sensor_gain = check_rel(gains.sensor_gain, targets.sensor_gains[i], GAIN_TOLERANCE);
        let edge_gain = check_rel(gains.edge_gain, targets.edge_gains[i], GAIN_TOLERANCE);
        let speedup = check_rel(gains.speedup, targets.speedups[i], GAIN_TOLERANCE);
        let pass = decisions_match
            && volume_pct.ok
            && reduction.map_or(false, |r| r.ok)
            && sensor_gain.ok
            && edge_gain.ok
            && speedup.ok;
        rows.push(SuiteRow {
            scenario: name.clone(),
            labels,
            expected_labels,
            decisions_match,
            volume_pct,
            reduction,
            sensor_gain,
            edge_gain,
            speedup,
            adaptive_accuracy: report.adaptive_accuracy,
            baseline_accuracy: report.baseline_accuracy,
            pass,
        });
    }
    let all_pass = rows.iter().all(|r| r.pass);
    Ok(SuiteReport {
        application,
        seeds: seeds.to_vec(),
        n_windows,
        rows,
        all_pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::OnceLock;

    fn stress_fixture() -> &'static (FeatureCatalog, ModelPool, Calibration) {
        static FIXTURE: OnceLock<(FeatureCatalog, ModelPool, Calibration)> = OnceLock::new();
        FIXTURE.get_or_init(|| {
            let catalog = config::load_catalog(Application::Stress).unwrap();
            let pool = ModelPool::train_default(Application::Stress, &catalog, 6).unwrap();
            let calibration = config::load_calibration().unwrap();
            (catalog, pool, calibration)
        })
    }

    #[test]
    fn bundled_presets_cover_four_scenarios_per_application() {
        let presets = ScenarioSpec::presets().unwrap();
        assert_eq!(presets.len(), 8);
        for application in [Application::Pain, Application::Stress] {
            for name in ["S1", "S2", "S3", "S4"] {
                let spec = ScenarioSpec::preset(application, name).unwrap();
                assert_eq!(spec.name, name);
                assert_eq!(spec.application, application);
            }
        }
        assert!(ScenarioSpec::preset(Application::Pain, "S9").is_err());
        let s1 = ScenarioSpec::preset(Application::Pain, "S1").unwrap();
        assert!(s1.noise.is_empty(), "first scenario is clean");
    }

    #[test]
    fn scenario_files_round_trip() {
        let spec = ScenarioSpec::preset(Application::Stress, "S3").unwrap();
        let dir = std::env::temp_dir().join("amser-harness-spec-test");
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("scenario.json");
        fs::write(&path, serde_json::to_string_pretty(&spec).unwrap()).unwrap();
        let loaded = ScenarioSpec::from_file(&path).unwrap();
        assert_eq!(loaded, spec);
        fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn noise_plans_respect_the_cutoff_and_vary_by_window() {
        let mut spec = ScenarioSpec::preset(Application::Stress, "S4").unwrap();
        spec.noise_until_window = Some(3);
        let before = spec.noise_specs(ModalityKind::Ecg, 9, 2);
        assert_eq!(before.len(), 2, "drift plus transients while noisy");
        assert!(spec.noise_specs(ModalityKind::Ecg, 9, 3).is_empty());
        let other_window = spec.noise_specs(ModalityKind::Ecg, 9, 1);
        assert_ne!(before[0].seed, other_window[0].seed);
        let other_seed = spec.noise_specs(ModalityKind::Ecg, 10, 2);
        assert_ne!(before[0].seed, other_seed[0].seed);
    }

    #[test]
    fn t_critical_values_match_the_standard_table() {
        assert!((paired_t_critical(29) - 1.6991).abs() < 1e-9);
        assert!((paired_t_critical(5) - 2.0150).abs() < 1e-9);
        assert!((paired_t_critical(100) - 1.6449).abs() < 1e-9);
        assert!(paired_t_critical(0).is_infinite());
    }

    #[test]
    fn paired_test_agrees_with_a_hand_computation() {
        // d = [0.2, 0.1, 0.3, 0.2]: mean 0.2, sd sqrt(1/150), n 4
        // t = 0.2 / (sd / 2) = 4.898979…, dof 3, critical 2.3534.
        let report = paired_t_test(&[0.2, 0.1, 0.3, 0.2]).unwrap();
        assert!((report.t_statistic - 4.898979485566356).abs() < 1e-9);
        assert_eq!(report.degrees_of_freedom, 3);
        assert!(report.significant);

        let flat = paired_t_test(&[0.0, 0.0, 0.0]).unwrap();
        assert!(!flat.significant, "no difference is not significance");

        let negative = paired_t_test(&[-0.2, -0.1, -0.3]).unwrap();
        assert!(!negative.significant);
        assert!(paired_t_test(&[0.5]).is_none(), "one pair has no variance");
    }

    #[test]
    fn severe_stress_scenario_settles_into_the_reduced_loop() {
        let (catalog, pool, calibration) = stress_fixture();
        let spec = ScenarioSpec::preset(Application::Stress, "S4").unwrap();
        let report =
            run_scenario(&spec, pool, catalog, calibration, &[21], 6).unwrap();
        assert_eq!(report.windows.len(), 6);

        let w0 = &report.windows[0];
        assert_eq!(w0.sensed.len(), 3, "everything acquires at startup");
        assert_eq!(
            w0.decision.labels[&ModalityKind::Ecg],
            QualityLabel::Noisy
        );
        assert_eq!(w0.commands.len(), 2, "heart and electrodermal power down");

        for w in &report.windows[1..5] {
            assert_eq!(w.sensed, vec![ModalityKind::Ppg], "only the pulse sensor runs");
            assert_eq!(w.cost.retained_features, 12);
            assert_eq!(
                w.model_key.as_deref(),
                Some("stress/ECG=-,PPG=S,EDA=-"),
                "window {}",
                w.window_index
            );
            assert!(w.fallback_note.is_none(), "exact model exists in the pool");
        }
        let probe = &report.windows[5];
        assert!(probe.probe);
        assert_eq!(probe.sensed.len(), 3, "probe re-powers everything");
        assert_eq!(
            probe.model_key.as_deref(),
            Some("stress/ECG=-,PPG=S,EDA=-"),
            "probe data stays out of fusion"
        );
        assert!(
            probe.cost.sensor_energy > report.windows[4].cost.sensor_energy,
            "probing costs extra sensor energy"
        );

        let gains = report.gains.unwrap();
        assert!(
            (gains.volume_pct - 100.0 * 12.0 / 85.0).abs() < 1e-9,
            "volume {}",
            gains.volume_pct
        );
        assert!(
            (gains.sensor_gain - 3.66).abs() / 3.66 < GAIN_TOLERANCE,
            "sensor gain {}",
            gains.sensor_gain
        );
    }

    #[test]
    fn recovery_restores_the_full_loop_after_a_probe() {
        let (catalog, pool, calibration) = stress_fixture();
        let mut spec = ScenarioSpec::preset(Application::Stress, "S4").unwrap();
        spec.noise_until_window = Some(3);
        let report =
            run_scenario(&spec, pool, catalog, calibration, &[4], 8).unwrap();

        // Windows 1–4: reduced loop (noise stopped at 3, but nobody looked).
        for w in &report.windows[1..5] {
            assert!(!w.decision.sensing.is_on(ModalityKind::Ecg), "window {}", w.window_index);
        }
        let probe = &report.windows[5];
        assert!(probe.probe);
        assert_eq!(
            probe.assessments[&ModalityKind::Ecg].label,
            QualityLabel::Reliable,
            "the probe sees the recovered signal"
        );
        assert!(
            probe.decision.sensing.is_on(ModalityKind::Ecg),
            "decision re-enables the sensor"
        );
        assert_eq!(
            probe.model_key.as_deref(),
            Some("stress/ECG=-,PPG=F,EDA=-"),
            "recovery shows in fusion only after re-acquisition"
        );
        assert!(
            probe.commands.contains(&SensorCommand::Wake(ModalityKind::Ecg)),
            "wake command issued"
        );
        let after = &report.windows[6];
        assert_eq!(
            after.model_key.as_deref(),
            Some("stress/ECG=F,PPG=F,EDA=F"),
            "full fusion resumes the window after the probe"
        );
        assert_eq!(after.cost.retained_features, 85);
    }

    #[test]
    fn reports_are_deterministic_and_self_consistent() {
        let (catalog, pool, calibration) = stress_fixture();
        let spec = ScenarioSpec::preset(Application::Stress, "S2").unwrap();
        let a = run_scenario(&spec, pool, catalog, calibration, &[5, 6], 4).unwrap();
        let b = run_scenario(&spec, pool, catalog, calibration, &[5, 6], 4).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap(),
            "same seeds, same bytes"
        );

        for stats in &a.seed_stats {
            let windows: Vec<_> =
                a.windows.iter().filter(|w| w.seed == stats.seed).collect();
            let hits = windows
                .iter()
                .filter(|w| w.predicted_class == Some(w.truth_class))
                .count();
            assert!(
                (stats.adaptive_accuracy - hits as f64 / windows.len() as f64).abs() < 1e-12,
                "per-seed accuracy recomputes from records"
            );
        }
        assert_eq!(a.config_digests.len(), config::config_names().len());
        assert!(a.paired_t.is_some(), "two seeds give one degree of freedom");
    }
}

//! Cost accounting and calibration fitting.
//!
//! Three budgets are tracked per window, all in abstract units calibrated
//! against reference hardware rather than measured live:
//!
//! * **sensor energy** — a fixed per-window draw for each powered sensor,
//!   an idle draw for each powered-down one, and a per-byte transmit term;
//! * **edge energy** and **latency** — both linear in the number of fused
//!   features, plus a per-model constant (model load and runtime overhead
//!   differ between pool entries);
//! * **data volume** — either 8 bytes per retained feature (the fused
//!   vector that actually leaves the device) or the raw per-sensor buffer
//!   sizes, selectable because both views are useful.
//!
//! [`fit_calibration`] inverts the model: given per-scenario gain targets
//! measured on the reference deployment, it solves for the per-sensor
//! budgets and per-model constants in closed form. The fit is exact when
//! the scenarios' disabled-sensor sets are nested (each worse scenario
//! disables a superset), which holds for the shipped presets; residuals are
//! reported either way so an inconsistent target set is visible, not
//! hidden.

use std::collections::{BTreeMap, BTreeSet};

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::controller::ModelKey;
use crate::error::{AmserError, Result};
use crate::signals::{Application, ModalityKind};

/// Bytes per fused feature in feature-volume mode (one double each).
pub const BYTES_PER_FEATURE: u64 = 8;

/// Which bytes count as transmitted data volume.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VolumeMode {
    /// The fused feature vector: 8 bytes per retained feature.
    #[default]
    Features,
    /// The raw sensor buffers of every powered sensor.
    Raw,
}

/// Energy model for one sensor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorEnergy {
    /// Energy per window while sensing.
    pub sense: f64,
    /// Energy per window while idled.
    pub idle: f64,
    /// Transmit energy per byte sent.
    pub tx_per_byte: f64,
}

/// Calibrated cost model for one application.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AppCalibration {
    pub sensor: BTreeMap<ModalityKind, SensorEnergy>,
    /// Edge energy per fused feature.
    pub edge_per_feature: f64,
    /// Edge energy constant per model, keyed by canonical key string.
    pub edge_constant: BTreeMap<String, f64>,
    /// Latency per fused feature (ms).
    pub latency_per_feature: f64,
    /// Latency constant per model (ms), keyed by canonical key string.
    pub latency_constant: BTreeMap<String, f64>,
}

/// Calibrations for every application, as persisted in
/// `calibration.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub format: String,
    pub applications: BTreeMap<Application, AppCalibration>,
}

/// Format tag expected in calibration files.
pub const CALIBRATION_FORMAT: &str = "amser-calibration-v1";

impl Calibration {
    /// The calibration for one application.
    pub fn for_application(&self, application: Application) -> Result<&AppCalibration> {
        self.applications.get(&application).ok_or_else(|| {
            AmserError::InvalidConfig(format!("no calibration for {application}"))
        })
    }

    /// Sanity checks: format tag, non-negative coefficients.
    pub fn validate(&self) -> Result<()> {
        if self.format != CALIBRATION_FORMAT {
            return Err(AmserError::InvalidConfig(format!(
                "unsupported calibration format `{}`",
                self.format
            )));
        }
        for (app, cal) in &self.applications {
            let all = cal
                .sensor
                .values()
                .flat_map(|s| [s.sense, s.idle, s.tx_per_byte])
                .chain([cal.edge_per_feature, cal.latency_per_feature])
                .chain(cal.edge_constant.values().copied())
                .chain(cal.latency_constant.values().copied());
            for v in all {
                if !v.is_finite() || v < 0.0 {
                    return Err(AmserError::InvalidConfig(format!(
                        "negative or non-finite coefficient in {app} calibration"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Costs of one window under one configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowCost {
    pub sensor_energy: f64,
    pub edge_energy: f64,
    pub latency_ms: f64,
    pub data_volume_bytes: u64,
    pub retained_features: usize,
}

/// Computes all budgets for one window.
///
/// `active` are the powered sensors; `model_key` selects the per-model
/// constants (`None` — the abstaining loop — runs no inference at all). A
/// key without a fitted constant uses the mean of the fitted ones.
pub fn window_cost(
    application: Application,
    calibration: &AppCalibration,
    retained_features: usize,
    active: &[ModalityKind],
    model_key: Option<&ModelKey>,
    volume_mode: VolumeMode,
) -> Result<WindowCost> {
    let mut sensor_energy = 0.0;
    for (&kind, energy) in &calibration.sensor {
        if active.contains(&kind) {
            let bytes = application.sensor_spec(kind).bytes_per_window;
            sensor_energy += energy.sense + energy.tx_per_byte * bytes as f64;
        } else {
            sensor_energy += energy.idle;
        }
    }
    let (edge_energy, latency_ms) = match model_key {
        None => (0.0, 0.0),
        Some(key) => {
            let f = retained_features as f64;
            (
                calibration.edge_per_feature * f
                    + constant_for(&calibration.edge_constant, key),
                calibration.latency_per_feature * f
                    + constant_for(&calibration.latency_constant, key),
            )
        }
    };
    let data_volume_bytes = match volume_mode {
        VolumeMode::Features => BYTES_PER_FEATURE * retained_features as u64,
        VolumeMode::Raw => active
            .iter()
            .map(|&k| application.sensor_spec(k).bytes_per_window)
            .sum(),
    };
    Ok(WindowCost {
        sensor_energy,
        edge_energy,
        latency_ms,
        data_volume_bytes,
        retained_features,
    })
}

fn constant_for(constants: &BTreeMap<String, f64>, key: &ModelKey) -> f64 {
    if let Some(c) = constants.get(&key.canonical()) {
        return *c;
    }
    if constants.is_empty() {
        return 0.0;
    }
    constants.values().sum::<f64>() / constants.len() as f64
}

/// The exact feature-count reduction implied by a retention ratio; `None`
/// when nothing is retained.
pub fn reduction(retention: Ratio<u64>) -> Option<Ratio<u64>> {
    (*retention.numer() > 0).then(|| retention.recip())
}

/// One operating condition used for fitting: what ran and what it kept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitScenario {
    pub name: String,
    pub retained_features: usize,
    /// Powered sensors.
    pub active: Vec<ModalityKind>,
    pub model_key: ModelKey,
}

/// Per-scenario gain targets from the reference deployment, all relative
/// to the first scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitTargets {
    /// Total sensor energy of the first (everything-on) scenario.
    pub s1_sensor_energy: f64,
    pub sensor_gains: Vec<f64>,
    pub edge_gains: Vec<f64>,
    pub speedups: Vec<f64>,
}

/// Achieved-versus-target record for one scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioResidual {
    pub name: String,
    pub sensor_gain_target: f64,
    pub sensor_gain_achieved: f64,
    pub edge_gain_target: f64,
    pub edge_gain_achieved: f64,
    pub speedup_target: f64,
    pub speedup_achieved: f64,
}

/// Fit quality report persisted next to the calibration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResiduals {
    pub application: Application,
    pub scenarios: Vec<ScenarioResidual>,
    pub max_abs_residual: f64,
}

/// Solves for a calibration that reproduces the target gains.
///
/// Sensor budgets: the first scenario fixes the total; each later scenario
/// constrains the summed budget of its disabled sensors. Budgets that stay
/// unconstrained are split in proportion to sample rate (faster sensors
/// draw more). Per-model constants: with per-feature cost 1, the constant
/// `X / gain − features` reproduces each gain exactly, where
/// `X = 1.3 · max(features · gain)` keeps every constant positive.
pub fn fit_calibration(
    application: Application,
    scenarios: &[FitScenario],
    targets: &FitTargets,
) -> Result<(AppCalibration, FitResiduals)> {
    let n = scenarios.len();
    if n == 0 {
        return Err(AmserError::InvalidParam("no scenarios to fit".into()));
    }
    if targets.sensor_gains.len() != n
        || targets.edge_gains.len() != n
        || targets.speedups.len() != n
    {
        return Err(AmserError::InvalidParam(
            "target vectors must match the scenario count".into(),
        ));
    }
    if targets.sensor_gains[0] != 1.0
        || targets.edge_gains[0] != 1.0
        || targets.speedups[0] != 1.0
    {
        return Err(AmserError::InvalidParam(
            "gains are relative to the first scenario, whose gain must be 1".into(),
        ));
    }
    let kinds = application.modalities();
    let total = targets.s1_sensor_energy;
    if !(total > 0.0) {
        return Err(AmserError::InvalidParam(
            "first-scenario sensor energy must be positive".into(),
        ));
    }

    // --- sensor budgets -------------------------------------------------
    let mut assigned: BTreeMap<ModalityKind, f64> = BTreeMap::new();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| kinds.len() - scenarios[i].active.len());
    for &i in &order {
        let off: BTreeSet<ModalityKind> = kinds
            .iter()
            .copied()
            .filter(|k| !scenarios[i].active.contains(k))
            .collect();
        let required: f64 = total - total / targets.sensor_gains[i];
        let already: f64 = off
            .iter()
            .filter_map(|k| assigned.get(k))
            .sum();
        let new_kinds: Vec<ModalityKind> = off
            .iter()
            .copied()
            .filter(|k| !assigned.contains_key(k))
            .collect();
        if new_kinds.is_empty() {
            continue; // Consistency is checked via residuals below.
        }
        let remaining = required - already;
        distribute_by_rate(application, &new_kinds, remaining, &mut assigned)?;
    }
    let leftover_kinds: Vec<ModalityKind> = kinds
        .iter()
        .copied()
        .filter(|k| !assigned.contains_key(k))
        .collect();
    let leftover = total - assigned.values().sum::<f64>();
    distribute_by_rate(application, &leftover_kinds, leftover, &mut assigned)?;

    let sensor: BTreeMap<ModalityKind, SensorEnergy> = assigned
        .iter()
        .map(|(&k, &sense)| {
            (
                k,
                SensorEnergy {
                    sense,
                    idle: 0.0,
                    tx_per_byte: 0.0,
                },
            )
        })
        .collect();

    // --- per-model constants --------------------------------------------
    let edge_constant = key_constants(scenarios, &targets.edge_gains)?;
    let latency_constant = key_constants(scenarios, &targets.speedups)?;

    let calibration = AppCalibration {
        sensor,
        edge_per_feature: 1.0,
        edge_constant,
        latency_per_feature: 1.0,
        latency_constant,
    };

    // --- residuals -------------------------------------------------------
    let cost = |i: usize| {
        window_cost(
            application,
            &calibration,
            scenarios[i].retained_features,
            &scenarios[i].active,
            Some(&scenarios[i].model_key),
            VolumeMode::Features,
        )
    };
    let base = cost(0)?;
    let mut residuals = Vec::with_capacity(n);
    let mut max_abs: f64 = 0.0;
    for i in 0..n {
        let c = cost(i)?;
        let r = ScenarioResidual {
            name: scenarios[i].name.clone(),
            sensor_gain_target: targets.sensor_gains[i],
            sensor_gain_achieved: base.sensor_energy / c.sensor_energy,
            edge_gain_target: targets.edge_gains[i],
            edge_gain_achieved: base.edge_energy / c.edge_energy,
            speedup_target: targets.speedups[i],
            speedup_achieved: base.latency_ms / c.latency_ms,
        };
        max_abs = max_abs
            .max((r.sensor_gain_achieved - r.sensor_gain_target).abs())
            .max((r.edge_gain_achieved - r.edge_gain_target).abs())
            .max((r.speedup_achieved - r.speedup_target).abs());
        residuals.push(r);
    }
    Ok((
        calibration,
        FitResiduals {
            application,
            scenarios: residuals,
            max_abs_residual: max_abs,
        },
    ))
}

/// Splits `amount` over `kinds` in proportion to their sample rates.
fn distribute_by_rate(
    application: Application,
    kinds: &[ModalityKind],
    amount: f64,
    assigned: &mut BTreeMap<ModalityKind, f64>,
) -> Result<()> {
    if kinds.is_empty() {
        return Ok(());
    }
    if amount < -1e-12 {
        return Err(AmserError::InvalidParam(format!(
            "sensor gain targets imply a negative budget ({amount:.6}) for {kinds:?}"
        )));
    }
    let rate_sum: f64 = kinds
        .iter()
        .map(|&k| application.sensor_spec(k).sample_rate as f64)
        .sum();
    for &k in kinds {
        let share = application.sensor_spec(k).sample_rate as f64 / rate_sum;
        assigned.insert(k, amount.max(0.0) * share);
    }
    Ok(())
}

/// Per-model constants reproducing the gains exactly with per-feature
/// cost 1.
fn key_constants(
    scenarios: &[FitScenario],
    gains: &[f64],
) -> Result<BTreeMap<String, f64>> {
    let x = 1.3
        * scenarios
            .iter()
            .zip(gains)
            .map(|(s, g)| s.retained_features as f64 * g)
            .fold(0.0f64, f64::max);
    let mut constants = BTreeMap::new();
    for (s, &g) in scenarios.iter().zip(gains) {
        if !(g > 0.0) {
            return Err(AmserError::InvalidParam(format!(
                "gain for {} must be positive",
                s.name
            )));
        }
        let c = x / g - s.retained_features as f64;
        if c < 0.0 {
            return Err(AmserError::InvalidParam(format!(
                "gain {g} for {} is unreachable with a shared per-feature cost",
                s.name
            )));
        }
        constants.insert(s.model_key.canonical(), c);
    }
    Ok(constants)
}

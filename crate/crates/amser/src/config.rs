//! Configuration files: embedded defaults with directory overrides.
//!
//! Every configuration the crate consumes — feature catalogs, monitoring
//! thresholds, scenario presets, published targets, and the fitted cost
//! calibration — ships embedded in the binary, so nothing works until a
//! file is deployed. Setting the `AMSER_CONFIG_DIR` environment variable
//! to a directory overrides individual files by name: a file present there
//! shadows the embedded copy, anything absent falls back to the default.
//!
//! Loaders validate on read and return the parsed structure; use
//! [`config_sha256`] to record which bytes a run actually saw.

use std::collections::BTreeMap;
use std::env;
use std::fs;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::controller::decide;
use crate::cost::{fit_calibration, Calibration, FitResiduals, FitScenario, FitTargets};
use crate::cost::CALIBRATION_FORMAT;
use crate::error::{AmserError, Result};
use crate::features::FeatureCatalog;
use crate::monitor::{MonitorConfig, QualityLabel};
use crate::signals::Application;

/// Environment variable naming the override directory.
pub const CONFIG_DIR_ENV: &str = "AMSER_CONFIG_DIR";

/// Format tag expected in `targets.json`.
pub const TARGETS_FORMAT: &str = "amser-targets-v1";

const EMBEDDED: &[(&str, &str)] = &[
    ("pain.catalog.json", include_str!("../configs/pain.catalog.json")),
    (
        "stress.catalog.json",
        include_str!("../configs/stress.catalog.json"),
    ),
    ("thresholds.json", include_str!("../configs/thresholds.json")),
    ("presets.json", include_str!("../configs/presets.json")),
    ("targets.json", include_str!("../configs/targets.json")),
    ("calibration.json", include_str!("../configs/calibration.json")),
    (
        "calibration.residuals.json",
        include_str!("../configs/calibration.residuals.json"),
    ),
];

/// The override directory, when `AMSER_CONFIG_DIR` is set and non-empty.
pub fn config_dir() -> Option<PathBuf> {
    match env::var(CONFIG_DIR_ENV) {
        Ok(dir) if !dir.is_empty() => Some(PathBuf::from(dir)),
        _ => None,
    }
}

/// Names of all configuration files this crate knows about.
pub fn config_names() -> Vec<&'static str> {
    EMBEDDED.iter().map(|(name, _)| *name).collect()
}

/// Reads a configuration file: the override directory first, embedded
/// defaults otherwise.
///
/// # Arguments
///
/// * `name` - File name such as `"targets.json"`, without any path.
pub fn read_config(name: &str) -> Result<String> {
    if let Some(dir) = config_dir() {
        let path = dir.join(name);
        if path.is_file() {
            return Ok(fs::read_to_string(path)?);
        }
    }
    EMBEDDED
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| (*text).to_string())
        .ok_or_else(|| AmserError::MissingResource(format!("unknown configuration `{name}`")))
}

/// Hex SHA-256 of the configuration text a load would see right now.
pub fn config_sha256(name: &str) -> Result<String> {
    let text = read_config(name)?;
    let mut hasher = Sha256::new();
    hasher.update(text.as_bytes());
    Ok(format!("{:x}", hasher.finalize()))
}

/// Loads and validates the feature catalog for one application.
///
/// # Example
///
/// ```
/// use amser::config;
/// use amser::signals::Application;
///
/// let catalog = config::load_catalog(Application::Pain)?;
/// assert_eq!(catalog.total_full(), 196);
/// # Ok::<(), amser::error::AmserError>(())
/// ```
pub fn load_catalog(application: Application) -> Result<FeatureCatalog> {
    let name = match application {
        Application::Pain => "pain.catalog.json",
        Application::Stress => "stress.catalog.json",
    };
    let catalog: FeatureCatalog = serde_json::from_str(&read_config(name)?)?;
    catalog.validate()?;
    if catalog.application != application {
        return Err(AmserError::InvalidConfig(format!(
            "catalog `{name}` is for {}, not {application}",
            catalog.application
        )));
    }
    Ok(catalog)
}

/// Loads the monitoring thresholds and discrepancy rules.
pub fn load_monitor_config() -> Result<MonitorConfig> {
    Ok(serde_json::from_str(&read_config("thresholds.json")?)?)
}

/// Loads and validates the fitted cost calibration.
pub fn load_calibration() -> Result<Calibration> {
    let calibration: Calibration = serde_json::from_str(&read_config("calibration.json")?)?;
    calibration.validate()?;
    Ok(calibration)
}

/// Published per-scenario expectations for one application.
///
/// All vectors are indexed by scenario; `labels` rows follow the
/// application's modality order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AppTargets {
    pub scenario_names: Vec<String>,
    pub labels: Vec<Vec<QualityLabel>>,
    /// Transmitted feature volume as a percentage of the everything-on
    /// configuration.
    pub volumes_pct: Vec<f64>,
    /// Feature-count reduction factors relative to everything-on.
    pub reductions: Vec<f64>,
    pub sensor_gains: Vec<f64>,
    pub edge_gains: Vec<f64>,
    pub speedups: Vec<f64>,
    /// Total sensor energy of the everything-on configuration.
    pub s1_sensor_energy: f64,
}

/// Published expectations for every application, as persisted in
/// `targets.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Targets {
    pub format: String,
    pub applications: BTreeMap<Application, AppTargets>,
}

impl Targets {
    /// The targets for one application.
    pub fn for_application(&self, application: Application) -> Result<&AppTargets> {
        self.applications
            .get(&application)
            .ok_or_else(|| AmserError::InvalidConfig(format!("no targets for {application}")))
    }

    /// Structural checks: aligned vector lengths, label rows matching the
    /// modality count, first-scenario gains of one.
    pub fn validate(&self) -> Result<()> {
        if self.format != TARGETS_FORMAT {
            return Err(AmserError::InvalidConfig(format!(
                "unsupported targets format `{}`",
                self.format
            )));
        }
        for (app, t) in &self.applications {
            let n = t.scenario_names.len();
            if n == 0 {
                return Err(AmserError::InvalidConfig(format!("{app}: no scenarios")));
            }
            let lens = [
                t.labels.len(),
                t.volumes_pct.len(),
                t.reductions.len(),
                t.sensor_gains.len(),
                t.edge_gains.len(),
                t.speedups.len(),
            ];
            if lens.iter().any(|&l| l != n) {
                return Err(AmserError::InvalidConfig(format!(
                    "{app}: target vectors disagree on the scenario count"
                )));
            }
            let kinds = app.modalities().len();
            if t.labels.iter().any(|row| row.len() != kinds) {
                return Err(AmserError::InvalidConfig(format!(
                    "{app}: a label row does not cover every modality"
                )));
            }
            if t.sensor_gains[0] != 1.0 || t.edge_gains[0] != 1.0 || t.speedups[0] != 1.0 {
                return Err(AmserError::InvalidConfig(format!(
                    "{app}: first-scenario gains must be 1"
                )));
            }
            if !(t.s1_sensor_energy > 0.0) {
                return Err(AmserError::InvalidConfig(format!(
                    "{app}: first-scenario sensor energy must be positive"
                )));
            }
        }
        Ok(())
    }
}

/// Loads and validates the published targets.
pub fn load_targets() -> Result<Targets> {
    let targets: Targets = serde_json::from_str(&read_config("targets.json")?)?;
    targets.validate()?;
    Ok(targets)
}

/// Expands published per-scenario labels into fit scenarios by running the
/// controller on each label row.
pub fn fit_scenarios(
    catalog: &FeatureCatalog,
    targets: &AppTargets,
) -> Result<Vec<FitScenario>> {
    let kinds = catalog.kinds();
    targets
        .scenario_names
        .iter()
        .zip(&targets.labels)
        .map(|(name, row)| {
            let map = kinds.iter().copied().zip(row.iter().copied()).collect();
            let decision = decide(catalog, &map)?;
            let model_key = decision.model_key.ok_or_else(|| {
                AmserError::InvalidConfig(format!(
                    "scenario {name} leaves no modality usable, so it cannot anchor a fit"
                ))
            })?;
            Ok(FitScenario {
                name: name.clone(),
                retained_features: catalog.retained_count(&decision.masks),
                active: decision.sensing.active(),
                model_key,
            })
        })
        .collect()
}

/// Fits the full calibration from the published targets.
///
/// This is what `fit-calibration` runs; the shipped `calibration.json` is
/// exactly its output, and the residual report alongside it records how
/// closely the fit reproduces each target.
pub fn fit_all() -> Result<(Calibration, Vec<FitResiduals>)> {
    let targets = load_targets()?;
    let mut applications = BTreeMap::new();
    let mut residuals = Vec::new();
    for (&app, t) in &targets.applications {
        let catalog = load_catalog(app)?;
        let scenarios = fit_scenarios(&catalog, t)?;
        let fit_targets = FitTargets {
            s1_sensor_energy: t.s1_sensor_energy,
            sensor_gains: t.sensor_gains.clone(),
            edge_gains: t.edge_gains.clone(),
            speedups: t.speedups.clone(),
        };
        let (calibration, residual) = fit_calibration(app, &scenarios, &fit_targets)?;
        applications.insert(app, calibration);
        residuals.push(residual);
    }
    Ok((
        Calibration {
            format: CALIBRATION_FORMAT.to_string(),
            applications,
        },
        residuals,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signals::ModalityKind;

    #[test]
    fn embedded_catalogs_load_for_both_applications() {
        let pain = load_catalog(Application::Pain).unwrap();
        assert_eq!(pain.total_full(), 196);
        let stress = load_catalog(Application::Stress).unwrap();
        assert_eq!(stress.total_full(), 85);
    }

    #[test]
    fn embedded_monitor_config_matches_the_builtin_default() {
        let loaded = load_monitor_config().unwrap();
        assert_eq!(loaded, MonitorConfig::default());
    }

    #[test]
    fn targets_expand_to_four_fit_scenarios_per_application() {
        let targets = load_targets().unwrap();
        for app in [Application::Pain, Application::Stress] {
            let catalog = load_catalog(app).unwrap();
            let scenarios = fit_scenarios(&catalog, targets.for_application(app).unwrap())
                .unwrap();
            assert_eq!(scenarios.len(), 4);
            assert_eq!(scenarios[0].retained_features, catalog.total_full());
            assert_eq!(scenarios[0].active.len(), app.modalities().len());
        }
        let pain = &targets.applications[&Application::Pain];
        let catalog = load_catalog(Application::Pain).unwrap();
        let scenarios = fit_scenarios(&catalog, pain).unwrap();
        assert_eq!(scenarios[2].retained_features, 70);
        assert!(!scenarios[2].active.contains(&ModalityKind::Emg));
        assert_eq!(scenarios[3].retained_features, 61);
    }

    #[test]
    fn shipped_calibration_is_exactly_the_refit() {
        let (calibration, residuals) = fit_all().unwrap();
        for r in &residuals {
            assert!(
                r.max_abs_residual < 1e-9,
                "{}: residual {}",
                r.application,
                r.max_abs_residual
            );
        }
        let shipped = read_config("calibration.json").unwrap();
        let refit = serde_json::to_string_pretty(&calibration).unwrap();
        assert_eq!(shipped, refit, "regenerate configs/calibration.json");
        load_calibration().unwrap();
    }

    #[test]
    fn digests_are_stable_hex_strings() {
        let a = config_sha256("targets.json").unwrap();
        let b = config_sha256("targets.json").unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 64);
        assert!(a.bytes().all(|c| c.is_ascii_hexdigit()));
        assert_ne!(a, config_sha256("thresholds.json").unwrap());
    }

    #[test]
    fn unknown_names_are_rejected() {
        assert!(read_config("nonexistent.json").is_err());
    }

    #[test]
    fn override_directory_shadows_individual_files() {
        // Exercised in-process with a directory that overrides one file;
        // everything else must still come from the embedded defaults. The
        // variable is cleared again immediately so concurrently running
        // tests keep seeing defaults for the files this directory lacks.
        let dir = std::env::temp_dir().join("amser-config-override-test");
        fs::create_dir_all(&dir).unwrap();
        let mut custom = MonitorConfig::default();
        custom.thresholds.noisy_max_db = 7.5;
        fs::write(
            dir.join("thresholds.json"),
            serde_json::to_string(&custom).unwrap(),
        )
        .unwrap();

        env::set_var(CONFIG_DIR_ENV, &dir);
        let loaded = load_monitor_config();
        let catalog = load_catalog(Application::Pain);
        env::remove_var(CONFIG_DIR_ENV);

        assert_eq!(loaded.unwrap().thresholds.noisy_max_db, 7.5);
        assert_eq!(catalog.unwrap().total_full(), 196, "fallback to embedded");
        fs::remove_dir_all(&dir).ok();
    }
}

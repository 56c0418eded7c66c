//! The closed-loop controller: quality labels in, sensing and masking
//! decisions out.
//!
//! The mapping is deliberately simple and total — every label combination
//! has exactly one decision, so behavior is auditable:
//!
//! * noisy → sensor off, no features (a corrupted stream costs energy and
//!   poisons the classifier; better to drop it entirely),
//! * uncertain → sensor on, uncertain feature subset (keep the robust core,
//!   shed the fragile tail),
//! * reliable → sensor on, full feature set.
//!
//! Each decision carries the [`ModelKey`] naming the classifier trained for
//! exactly that modality/mask combination, and the exact fraction of
//! features retained. When every modality is noisy the loop abstains rather
//! than guess.
//!
//! Reconfiguration is expressed as idempotent wake/idle commands — the diff
//! between two sensing configurations — and disabled sensors are probed on a
//! fixed schedule so a recovered signal can re-enter the loop.

use std::collections::BTreeMap;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{AmserError, Result};
use crate::features::{FeatureCatalog, FeatureMask};
use crate::monitor::QualityLabel;
use crate::signals::{fnv1a64, Application, ModalityKind};

/// Default number of windows between probes of disabled sensors.
pub const RECHECK_PERIOD_DEFAULT: u32 = 5;

/// Which sensors are powered.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SensingConfig {
    on: BTreeMap<ModalityKind, bool>,
}

impl SensingConfig {
    /// Everything powered — the startup state.
    pub fn all_on(kinds: &[ModalityKind]) -> SensingConfig {
        SensingConfig {
            on: kinds.iter().map(|&k| (k, true)).collect(),
        }
    }

    /// Whether a sensor is powered; unknown sensors are off.
    pub fn is_on(&self, kind: ModalityKind) -> bool {
        self.on.get(&kind).copied().unwrap_or(false)
    }

    pub fn set(&mut self, kind: ModalityKind, on: bool) {
        self.on.insert(kind, on);
    }

    /// Powered sensors in fusion order.
    pub fn active(&self) -> Vec<ModalityKind> {
        self.on
            .iter()
            .filter_map(|(&k, &on)| on.then_some(k))
            .collect()
    }
}

/// A single idempotent sensor transition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SensorCommand {
    Wake(ModalityKind),
    Idle(ModalityKind),
}

/// Commands needed to move from one sensing configuration to another.
/// Applying the result twice, or diffing a configuration against itself,
/// yields nothing — reconfiguration is idempotent.
pub fn reconfigure(prev: &SensingConfig, next: &SensingConfig) -> Vec<SensorCommand> {
    let mut kinds: Vec<ModalityKind> = prev.on.keys().chain(next.on.keys()).copied().collect();
    kinds.sort();
    kinds.dedup();
    kinds
        .into_iter()
        .filter_map(|k| match (prev.is_on(k), next.is_on(k)) {
            (false, true) => Some(SensorCommand::Wake(k)),
            (true, false) => Some(SensorCommand::Idle(k)),
            _ => None,
        })
        .collect()
}

/// True on windows where disabled sensors are briefly re-powered to check
/// whether their signal recovered. The first window is never a probe.
pub fn is_probe_window(window_index: u32, recheck_period: u32) -> bool {
    recheck_period > 0 && window_index > 0 && window_index % recheck_period == 0
}

/// Identifies one trained classifier: the application plus the exact mask
/// of every modality, in fusion order.
///
/// The canonical string form (`pain/ECG=F,EMG=S,PPG=-,EDA=S`) is what
/// appears in persisted pools and reports; `F` is full, `S` the uncertain
/// subset, `-` excluded.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct ModelKey {
    pub application: Application,
    pub masks: Vec<(ModalityKind, FeatureMask)>,
}

impl ModelKey {
    /// Builds the key for a mask assignment over the given modalities (in
    /// fusion order); modalities absent from the map count as excluded.
    pub fn from_masks(
        application: Application,
        kinds: &[ModalityKind],
        masks: &BTreeMap<ModalityKind, FeatureMask>,
    ) -> ModelKey {
        ModelKey {
            application,
            masks: kinds
                .iter()
                .map(|&k| (k, masks.get(&k).copied().unwrap_or(FeatureMask::Empty)))
                .collect(),
        }
    }

    /// The canonical string form.
    pub fn canonical(&self) -> String {
        let parts: Vec<String> = self
            .masks
            .iter()
            .map(|(k, m)| {
                let symbol = match m {
                    FeatureMask::Full => "F",
                    FeatureMask::Subset => "S",
                    FeatureMask::Empty => "-",
                };
                format!("{k}={symbol}")
            })
            .collect();
        format!("{}/{}", self.application, parts.join(","))
    }

    /// 64-bit FNV-1a digest of the canonical string; stable across runs and
    /// platforms.
    pub fn signature(&self) -> u64 {
        fnv1a64(self.canonical().as_bytes())
    }

    /// The mask for one modality; excluded if the modality is not part of
    /// the key.
    pub fn mask(&self, kind: ModalityKind) -> FeatureMask {
        self.masks
            .iter()
            .find(|(k, _)| *k == kind)
            .map(|(_, m)| *m)
            .unwrap_or(FeatureMask::Empty)
    }

    /// Masks as a map, for retention lookups and fusion.
    pub fn mask_map(&self) -> BTreeMap<ModalityKind, FeatureMask> {
        self.masks.iter().copied().collect()
    }

    /// Modalities the key actually uses (mask not `-`).
    pub fn used(&self) -> Vec<ModalityKind> {
        self.masks
            .iter()
            .filter_map(|(k, m)| (*m != FeatureMask::Empty).then_some(*k))
            .collect()
    }

    /// Every key reachable by the controller over the given modalities:
    /// all mask combinations except the empty one (3^n − 1).
    pub fn all_reachable(application: Application, kinds: &[ModalityKind]) -> Vec<ModelKey> {
        let options = [FeatureMask::Full, FeatureMask::Subset, FeatureMask::Empty];
        let mut keys = Vec::new();
        let total = 3usize.pow(kinds.len() as u32);
        for combo in 0..total {
            let mut c = combo;
            let masks: Vec<(ModalityKind, FeatureMask)> = kinds
                .iter()
                .map(|&k| {
                    let m = options[c % 3];
                    c /= 3;
                    (k, m)
                })
                .collect();
            if masks.iter().all(|(_, m)| *m == FeatureMask::Empty) {
                continue;
            }
            keys.push(ModelKey {
                application,
                masks,
            });
        }
        keys.sort();
        keys
    }
}

impl std::fmt::Display for ModelKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.canonical())
    }
}

impl From<ModelKey> for String {
    fn from(key: ModelKey) -> String {
        key.canonical()
    }
}

impl TryFrom<String> for ModelKey {
    type Error = AmserError;

    fn try_from(s: String) -> Result<ModelKey> {
        let bad = || AmserError::InvalidConfig(format!("malformed model key `{s}`"));
        let (app, rest) = s.split_once('/').ok_or_else(bad)?;
        let application: Application = app.parse().map_err(|_| bad())?;
        let mut masks = Vec::new();
        for part in rest.split(',') {
            let (kind, symbol) = part.split_once('=').ok_or_else(bad)?;
            let kind: ModalityKind = kind.parse().map_err(|_| bad())?;
            let mask = match symbol {
                "F" => FeatureMask::Full,
                "S" => FeatureMask::Subset,
                "-" => FeatureMask::Empty,
                _ => return Err(bad()),
            };
            masks.push((kind, mask));
        }
        if masks.is_empty() {
            return Err(bad());
        }
        Ok(ModelKey { application, masks })
    }
}

/// One complete controller output for a window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlDecision {
    /// The labels the decision was made from.
    pub labels: BTreeMap<ModalityKind, QualityLabel>,
    /// Sensors to power for the next acquisition.
    pub sensing: SensingConfig,
    /// Feature mask per modality.
    pub masks: BTreeMap<ModalityKind, FeatureMask>,
    /// Classifier to use; `None` means abstain (no usable modality).
    pub model_key: Option<ModelKey>,
    /// Exact fraction of the full feature set retained.
    pub retention: Ratio<u64>,
}

/// Maps one label to its sensing/masking action.
fn action_for(label: QualityLabel) -> (bool, FeatureMask) {
    match label {
        QualityLabel::Reliable => (true, FeatureMask::Full),
        QualityLabel::Uncertain => (true, FeatureMask::Subset),
        QualityLabel::Noisy => (false, FeatureMask::Empty),
    }
}

/// Computes the decision for a full set of per-modality labels. Every
/// modality in the catalog must be labeled.
pub fn decide(
    catalog: &FeatureCatalog,
    labels: &BTreeMap<ModalityKind, QualityLabel>,
) -> Result<ControlDecision> {
    let kinds = catalog.kinds();
    let mut sensing = SensingConfig {
        on: BTreeMap::new(),
    };
    let mut masks = BTreeMap::new();
    for &kind in &kinds {
        let label = *labels.get(&kind).ok_or_else(|| {
            AmserError::InvalidParam(format!("no quality label for {kind}"))
        })?;
        let (on, mask) = action_for(label);
        sensing.set(kind, on);
        masks.insert(kind, mask);
    }
    let model_key = if masks.values().all(|m| *m == FeatureMask::Empty) {
        None
    } else {
        Some(ModelKey::from_masks(catalog.application, &kinds, &masks))
    };
    let retention = catalog.retention(&masks);
    Ok(ControlDecision {
        labels: labels.clone(),
        sensing,
        masks,
        model_key,
        retention,
    })
}

//! Model pool: one classifier per modality/mask combination.
//!
//! Changing the feature mask changes the input dimensionality, so a single
//! classifier cannot serve every controller decision. Instead, a pool is
//! trained up front with one model per reachable [`ModelKey`] (3^n − 1
//! combinations for n modalities); at run time the controller's key selects
//! the matching model in O(log n) with no retraining.
//!
//! Every model embeds its own standardization statistics, estimated on the
//! same training rows it was fitted on, so a persisted pool is
//! self-contained. The default classifier is nearest-centroid in
//! standardized space — cheap, deterministic, and well matched to the
//! synthetic classes; a softmax-trained linear head is available as an
//! alternative. Ties resolve to the lowest class index.
//!
//! Pools persist as JSON wrapped in an envelope carrying a SHA-256 digest of
//! the serialized pool; the digest is re-derived and checked on load so a
//! truncated or hand-edited pool fails loudly instead of mispredicting.

use std::collections::BTreeMap;
use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::controller::ModelKey;
use crate::error::{AmserError, Result};
use crate::features::{extract, fuse, FeatureCatalog, FeatureMask, FeatureVector};
use crate::noise::{inject_all, NoiseSpec};
use crate::signals::{derive_rng, gauss, synth, Application, ModalityKind, SynthParams};

/// Seed used by [`ModelPool::train_default`]; fixed so the default pool is
/// reproducible everywhere.
pub const DEFAULT_TRAIN_SEED: u64 = 7;

/// Default training-set size per class.
pub const DEFAULT_N_PER_CLASS: usize = 24;

/// Variance floor for standardization; dimensions that are constant in
/// training are passed through unscaled.
const STD_FLOOR: f64 = 1e-9;

/// Number of affect classes per application.
pub fn class_count(application: Application) -> usize {
    match application {
        Application::Pain => 4,
        Application::Stress => 3,
    }
}

/// Draws the physiological parameters for one subject window of a class.
/// Classes are coded into heart rate, electrodermal tonic level, and
/// response rate/amplitude; the muscle channel is class-independent filler.
pub(crate) fn class_params(class: usize, rng: &mut impl Rng) -> SynthParams {
    let k = class as f64;
    SynthParams {
        heart_rate_bpm: (62.0 + 10.0 * k + 5.0 * gauss(rng)).clamp(40.0, 175.0),
        hrv_rel: 0.02,
        amplitude: 1.0,
        eda_tonic_us: (2.0 + 0.5 * k + 0.18 * gauss(rng)).max(0.3),
        eda_drift_us: 0.02,
        scr_rate_per_min: (2.0 + k + 0.3 * gauss(rng)).max(0.5),
        scr_amplitude_us: (0.15 + 0.1 * k + 0.02 * gauss(rng)).max(0.06),
        seed: rng.gen(),
    }
}

/// One labeled training sample: full per-modality vectors, fused later per
/// key.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub class: usize,
    pub parts: BTreeMap<ModalityKind, FeatureVector>,
}

/// A labeled dataset of per-modality full feature vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub application: Application,
    pub classes: usize,
    pub samples: Vec<Sample>,
}

impl Dataset {
    /// Number of samples (`classes × n_per_class`).
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Synthesizes a labeled dataset: `n_per_class` windows per class, each a
/// fresh physiological draw. Every second sample additionally carries mild
/// drift noise (20 dB) on all modalities so standardization statistics are
/// not brittle against slightly imperfect signals.
pub fn make_dataset(
    application: Application,
    catalog: &FeatureCatalog,
    n_per_class: usize,
    seed: u64,
) -> Result<Dataset> {
    if n_per_class == 0 {
        return Err(AmserError::InvalidParam(
            "need at least one sample per class".into(),
        ));
    }
    let classes = class_count(application);
    let kinds = catalog.kinds();
    let mut rng = derive_rng(seed, "dataset");
    let mut plan: Vec<(usize, SynthParams, bool, u64)> = Vec::new();
    for class in 0..classes {
        for i in 0..n_per_class {
            let params = class_params(class, &mut rng);
            let augment = i % 2 == 1;
            plan.push((class, params, augment, rng.gen()));
        }
    }

    let samples: Result<Vec<Sample>> = plan
        .par_iter()
        .map(|(class, params, augment, noise_seed)| {
            let mut parts = BTreeMap::new();
            for &kind in &kinds {
                let spec = application.sensor_spec(kind);
                let clean = synth(kind, params, &spec)?;
                let window = if *augment {
                    inject_all(&clean, &[NoiseSpec::bw(20.0, *noise_seed)])?
                } else {
                    clean
                };
                parts.insert(kind, extract(&window, catalog)?);
            }
            Ok(Sample {
                class: *class,
                parts,
            })
        })
        .collect();
    Ok(Dataset {
        application,
        classes,
        samples: samples?,
    })
}

/// Classifier family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ModelAlgo {
    /// Nearest centroid in standardized space.
    #[default]
    Centroid,
    /// Linear softmax head trained by gradient descent.
    Linear,
}

/// One trained classifier for a specific modality/mask combination.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub key: ModelKey,
    pub algo: ModelAlgo,
    pub dim: usize,
    pub classes: usize,
    /// Standardization statistics from the training rows.
    pub feature_means: Vec<f64>,
    pub feature_stds: Vec<f64>,
    /// Per-class centroids in standardized space (centroid models).
    pub centroids: Vec<Vec<f64>>,
    /// Per-class weight rows including bias as the last entry (linear
    /// models).
    pub weights: Vec<Vec<f64>>,
    /// Training rows seen per class; classes that were never seen are
    /// excluded from scoring.
    pub class_counts: Vec<usize>,
    /// True when training saw fewer than two classes; predictions then
    /// collapse to the only class seen and should not be trusted.
    pub degenerate: bool,
}

/// Output of one inference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub class: usize,
    /// Per-class score (higher is better): negated squared distance for
    /// centroid models, logits for linear ones.
    pub scores: Vec<f64>,
}

impl Model {
    /// Fits one model for `key` by projecting each dataset sample through
    /// the key's masks.
    pub fn train(
        key: &ModelKey,
        dataset: &Dataset,
        catalog: &FeatureCatalog,
        algo: ModelAlgo,
    ) -> Result<Model> {
        let masks = key.mask_map();
        let dim = catalog.retained_count(&masks);
        if dim == 0 {
            return Err(AmserError::InvalidParam(format!(
                "key {key} retains no features"
            )));
        }
        let mut rows = Vec::with_capacity(dataset.len());
        let mut labels = Vec::with_capacity(dataset.len());
        for sample in &dataset.samples {
            let fused = fuse(catalog, &sample.parts, &masks)?;
            rows.push(fused.values);
            labels.push(sample.class);
        }
        if rows.is_empty() {
            return Err(AmserError::InsufficientData("empty training set".into()));
        }

        let n = rows.len() as f64;
        let mut means = vec![0.0; dim];
        for row in &rows {
            for (m, v) in means.iter_mut().zip(row) {
                *m += v / n;
            }
        }
        let mut stds = vec![0.0; dim];
        for row in &rows {
            for ((s, v), m) in stds.iter_mut().zip(row).zip(&means) {
                *s += (v - m).powi(2) / n;
            }
        }
        for s in &mut stds {
            *s = s.sqrt();
            if *s < STD_FLOOR {
                *s = 1.0;
            }
        }
        let standardized: Vec<Vec<f64>> = rows
            .iter()
            .map(|row| {
                row.iter()
                    .zip(&means)
                    .zip(&stds)
                    .map(|((v, m), s)| (v - m) / s)
                    .collect()
            })
            .collect();

        let seen: std::collections::BTreeSet<usize> = labels.iter().copied().collect();
        let degenerate = seen.len() < 2;

        let mut centroids = vec![vec![0.0; dim]; dataset.classes];
        let mut counts = vec![0usize; dataset.classes];
        for (row, &class) in standardized.iter().zip(&labels) {
            counts[class] += 1;
            for (c, v) in centroids[class].iter_mut().zip(row) {
                *c += v;
            }
        }
        for (centroid, count) in centroids.iter_mut().zip(&counts) {
            if *count > 0 {
                for c in centroid.iter_mut() {
                    *c /= *count as f64;
                }
            }
        }

        let weights = match algo {
            ModelAlgo::Centroid => Vec::new(),
            ModelAlgo::Linear => {
                train_linear(&standardized, &labels, dataset.classes, dim)
            }
        };

        Ok(Model {
            key: key.clone(),
            algo,
            dim,
            classes: dataset.classes,
            feature_means: means,
            feature_stds: stds,
            centroids,
            weights,
            class_counts: counts,
            degenerate,
        })
    }

    /// Classifies one fused vector.
    pub fn infer(&self, vector: &FeatureVector) -> Result<Prediction> {
        if vector.values.len() != self.dim {
            return Err(AmserError::DimensionMismatch(format!(
                "model {} expects {} features, got {}",
                self.key,
                self.dim,
                vector.values.len()
            )));
        }
        let z: Vec<f64> = vector
            .values
            .iter()
            .zip(&self.feature_means)
            .zip(&self.feature_stds)
            .map(|((v, m), s)| (v - m) / s)
            .collect();
        let scores: Vec<f64> = match self.algo {
            ModelAlgo::Centroid => self
                .centroids
                .iter()
                .map(|c| -c.iter().zip(&z).map(|(a, b)| (a - b).powi(2)).sum::<f64>())
                .collect(),
            ModelAlgo::Linear => self
                .weights
                .iter()
                .map(|w| {
                    w[..self.dim].iter().zip(&z).map(|(a, b)| a * b).sum::<f64>()
                        + w[self.dim]
                })
                .collect(),
        };
        // Strict comparison: ties resolve to the lowest eligible class
        // index. Classes never seen in training are not eligible.
        let eligible = |i: usize| self.class_counts.get(i).map_or(true, |c| *c > 0);
        let mut best: Option<usize> = None;
        for (i, s) in scores.iter().enumerate() {
            if !eligible(i) {
                continue;
            }
            match best {
                None => best = Some(i),
                Some(b) if *s > scores[b] => best = Some(i),
                Some(_) => {}
            }
        }
        let class = best.ok_or_else(|| {
            AmserError::DegenerateInput("model has no trained classes".into())
        })?;
        Ok(Prediction { class, scores })
    }
}

/// Batch-gradient softmax regression: 200 epochs at step 0.1.
fn train_linear(
    rows: &[Vec<f64>],
    labels: &[usize],
    classes: usize,
    dim: usize,
) -> Vec<Vec<f64>> {
    let mut weights = vec![vec![0.0; dim + 1]; classes];
    let n = rows.len() as f64;
    for _ in 0..200 {
        let mut grad = vec![vec![0.0; dim + 1]; classes];
        for (row, &label) in rows.iter().zip(labels) {
            let logits: Vec<f64> = weights
                .iter()
                .map(|w| w[..dim].iter().zip(row).map(|(a, b)| a * b).sum::<f64>() + w[dim])
                .collect();
            let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
            let total: f64 = exps.iter().sum();
            for (c, g) in grad.iter_mut().enumerate() {
                let p = exps[c] / total - if c == label { 1.0 } else { 0.0 };
                for (gi, xi) in g[..dim].iter_mut().zip(row) {
                    *gi += p * xi / n;
                }
                g[dim] += p / n;
            }
        }
        for (w, g) in weights.iter_mut().zip(&grad) {
            for (wi, gi) in w.iter_mut().zip(g) {
                *wi -= 0.1 * gi;
            }
        }
    }
    weights
}

/// Result of looking a key up in the pool.
#[derive(Debug, Clone, PartialEq)]
pub struct Selected<'a> {
    pub model: &'a Model,
    /// Present when the exact key was missing and a same-modality full-mask
    /// model was substituted; the text explains the substitution.
    pub note: Option<String>,
}

/// The trained pool: every reachable key of one application.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelPool {
    pub application: Application,
    pub classes: usize,
    pub n_per_class: usize,
    pub seed: u64,
    pub algo: ModelAlgo,
    /// Keyed by the canonical key string.
    pub models: BTreeMap<String, Model>,
}

/// On-disk wrapper: the pool plus a SHA-256 digest of its serialized form.
#[derive(Debug, Serialize, Deserialize)]
struct PoolEnvelope {
    format: String,
    sha256: String,
    pool: ModelPool,
}

const POOL_FORMAT: &str = "amser-pool-v1";

fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

impl ModelPool {
    /// Trains one model per reachable key with the fixed default seed and
    /// the centroid classifier.
    pub fn train_default(
        application: Application,
        catalog: &FeatureCatalog,
        n_per_class: usize,
    ) -> Result<ModelPool> {
        ModelPool::train(
            application,
            catalog,
            n_per_class,
            DEFAULT_TRAIN_SEED,
            ModelAlgo::Centroid,
        )
    }

    /// Trains one model per reachable key from a single shared dataset.
    pub fn train(
        application: Application,
        catalog: &FeatureCatalog,
        n_per_class: usize,
        seed: u64,
        algo: ModelAlgo,
    ) -> Result<ModelPool> {
        catalog.validate()?;
        let dataset = make_dataset(application, catalog, n_per_class, seed)?;
        let keys = ModelKey::all_reachable(application, &catalog.kinds());
        let trained: Result<Vec<(String, Model)>> = keys
            .par_iter()
            .map(|key| {
                let model = Model::train(key, &dataset, catalog, algo)?;
                Ok((key.canonical(), model))
            })
            .collect();
        Ok(ModelPool {
            application,
            classes: dataset.classes,
            n_per_class,
            seed,
            algo,
            models: trained?.into_iter().collect(),
        })
    }

    /// Looks up the model for a key. A missing key falls back to the
    /// full-mask model over the same modality set (the caller must then
    /// zero-fill the vector via [`expand_for_fallback`]); if that is missing
    /// too the lookup fails.
    pub fn select(&self, key: &ModelKey) -> Result<Selected<'_>> {
        if let Some(model) = self.models.get(&key.canonical()) {
            return Ok(Selected { model, note: None });
        }
        let fallback = ModelKey {
            application: key.application,
            masks: key
                .masks
                .iter()
                .map(|(k, m)| {
                    (
                        *k,
                        if *m == FeatureMask::Empty {
                            FeatureMask::Empty
                        } else {
                            FeatureMask::Full
                        },
                    )
                })
                .collect(),
        };
        if let Some(model) = self.models.get(&fallback.canonical()) {
            return Ok(Selected {
                model,
                note: Some(format!(
                    "no model for {key}; substituted {fallback} with zero-filled features"
                )),
            });
        }
        Err(AmserError::ModelUnavailable(format!(
            "no model for {key} and no full-mask fallback"
        )))
    }

    /// The model for one key, if present.
    pub fn get(&self, key: &ModelKey) -> Option<&Model> {
        self.models.get(&key.canonical())
    }

    /// Writes the pool with its content digest.
    pub fn save(&self, path: &Path) -> Result<()> {
        let payload = serde_json::to_string(self)?;
        let envelope = PoolEnvelope {
            format: POOL_FORMAT.to_string(),
            sha256: sha256_hex(payload.as_bytes()),
            pool: self.clone(),
        };
        std::fs::write(path, serde_json::to_string(&envelope)?)?;
        Ok(())
    }

    /// Reads a pool and verifies its content digest.
    pub fn load(path: &Path) -> Result<ModelPool> {
        let text = std::fs::read_to_string(path)?;
        let envelope: PoolEnvelope = serde_json::from_str(&text)?;
        if envelope.format != POOL_FORMAT {
            return Err(AmserError::InvalidConfig(format!(
                "unsupported pool format `{}`",
                envelope.format
            )));
        }
        let payload = serde_json::to_string(&envelope.pool)?;
        let digest = sha256_hex(payload.as_bytes());
        if digest != envelope.sha256 {
            return Err(AmserError::InvalidConfig(
                "pool content digest mismatch; file is corrupt or was edited".into(),
            ));
        }
        Ok(envelope.pool)
    }
}

/// Re-expresses a vector fused for `requested` in the layout `fallback`
/// expects, zero-filling the dimensions `requested` had dropped. `fallback`
/// must be at least as inclusive as `requested` on every modality.
pub fn expand_for_fallback(
    catalog: &FeatureCatalog,
    requested: &ModelKey,
    fallback: &ModelKey,
    vector: &FeatureVector,
) -> Result<FeatureVector> {
    let mut out = Vec::new();
    let mut cursor = 0usize;
    for m in &catalog.modalities {
        let from = requested.mask(m.kind);
        let to = fallback.mask(m.kind);
        let take = from.retained(m);
        let part = vector.values.get(cursor..cursor + take).ok_or_else(|| {
            AmserError::DimensionMismatch(format!(
                "vector too short for {requested} at {}",
                m.kind
            ))
        })?;
        cursor += take;
        match (from, to) {
            (_, FeatureMask::Empty) if from == FeatureMask::Empty => {}
            (FeatureMask::Full, FeatureMask::Full) => out.extend_from_slice(part),
            (FeatureMask::Subset, FeatureMask::Full) => {
                let mut full = vec![0.0; m.features.len()];
                for (slot, v) in m.subset_indices().into_iter().zip(part) {
                    full[slot] = *v;
                }
                out.extend_from_slice(&full);
            }
            (FeatureMask::Empty, FeatureMask::Full) => {
                out.extend(std::iter::repeat_n(0.0, m.features.len()));
            }
            (FeatureMask::Subset, FeatureMask::Subset) => out.extend_from_slice(part),
            (from, to) => {
                return Err(AmserError::InvalidMask(format!(
                    "cannot widen {} from {from:?} to {to:?}",
                    m.kind
                )));
            }
        }
    }
    if cursor != vector.values.len() {
        return Err(AmserError::DimensionMismatch(format!(
            "vector has {} values, {requested} expects {cursor}",
            vector.values.len()
        )));
    }
    Ok(FeatureVector {
        values: out,
        window_index: vector.window_index,
        valid: vector.valid,
    })
}

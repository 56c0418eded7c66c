//! Trains the keyed model pool, evaluates it on held-out windows, and
//! round-trips it through disk with digest verification.
//!
//! ```bash
//! cargo run --example model_pool
//! ```
//!
//! One model exists per reachable mask assignment, keyed by strings like
//! `stress/ECG=-,PPG=S,EDA=-`, so the controller can swap classifiers the
//! moment a modality drops out instead of retraining anything.

use std::collections::BTreeMap;

use amser::config;
use amser::controller::ModelKey;
use amser::error::Result;
use amser::features::{extract, FeatureMask};
use amser::models::{make_dataset, ModelPool};
use amser::signals::{synth, Application, ModalityKind, SynthParams};

fn main() -> Result<()> {
    let app = Application::Stress;
    let catalog = config::load_catalog(app)?;
    let pool = ModelPool::train_default(app, &catalog, 12)?;
    println!(
        "trained {} models for {app} ({} classes, {} samples/class)",
        pool.models.len(),
        pool.classes,
        pool.n_per_class
    );
    let full_key = ModelKey::from_masks(app, &catalog.kinds(), &catalog.full_masks());
    println!("full model dimensionality: {}", pool.get(&full_key).unwrap().dim);

    // Held-out evaluation: a fresh dataset from a different seed.
    let holdout = make_dataset(app, &catalog, 6, 999)?;
    let full_masks = catalog.full_masks();
    let model = pool.select(&full_key)?.model;
    let mut hits = 0;
    for sample in &holdout.samples {
        let fused = amser::features::fuse(&catalog, &sample.parts, &full_masks)?;
        if model.infer(&fused)?.class == sample.class {
            hits += 1;
        }
    }
    println!(
        "held-out accuracy (full fusion): {hits}/{} = {:.2}",
        holdout.len(),
        hits as f64 / holdout.len() as f64
    );

    // Single-window inference through a reduced key.
    let reduced: BTreeMap<ModalityKind, FeatureMask> = [
        (ModalityKind::Ecg, FeatureMask::Empty),
        (ModalityKind::Ppg, FeatureMask::Subset),
        (ModalityKind::Eda, FeatureMask::Full),
    ]
    .into();
    let key = ModelKey::from_masks(app, &catalog.kinds(), &reduced);
    let mut parts = BTreeMap::new();
    let params = SynthParams {
        heart_rate_bpm: 85.0,
        eda_tonic_us: 3.0,
        scr_rate_per_min: 4.0,
        seed: 31,
        ..SynthParams::default()
    };
    for &kind in app.modalities() {
        let window = synth(kind, &params, &app.sensor_spec(kind))?;
        parts.insert(kind, extract(&window, &catalog)?);
    }
    let fused = amser::features::fuse(&catalog, &parts, &reduced)?;
    let selected = pool.select(&key)?;
    println!(
        "key {}: predicted class {} (note: {})",
        key.canonical(),
        selected.model.infer(&fused)?.class,
        selected.note.as_deref().unwrap_or("exact match"),
    );

    // Persistence: the envelope carries a digest, so tampering is caught.
    let dir = std::env::temp_dir().join("amser-model-pool-example");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("pool.bin");
    pool.save(&path)?;
    let loaded = ModelPool::load(&path)?;
    println!(
        "saved and reloaded: {} models, digest verified",
        loaded.models.len()
    );
    std::fs::remove_dir_all(&dir).ok();
    Ok(())
}

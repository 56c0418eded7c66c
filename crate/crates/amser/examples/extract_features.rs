//! Extracts per-modality feature vectors and fuses them under different
//! mask assignments.
//!
//! ```bash
//! cargo run --example extract_features
//! ```
//!
//! A catalog names every feature per modality and marks the subset kept
//! when a modality is merely uncertain. Fusion concatenates the retained
//! values in catalog order, so a mask assignment fully determines the
//! fused dimensionality — which is what model-pool keys are made of.

use std::collections::BTreeMap;

use amser::config;
use amser::error::Result;
use amser::features::{extract, fuse, FeatureMask};
use amser::signals::{synth, Application, ModalityKind, SynthParams};

fn main() -> Result<()> {
    let app = Application::Pain;
    let catalog = config::load_catalog(app)?;
    let params = SynthParams {
        heart_rate_bpm: 82.0,
        scr_rate_per_min: 5.0,
        seed: 17,
        ..SynthParams::default()
    };

    let mut parts = BTreeMap::new();
    println!("per-modality extraction ({app}):");
    for &kind in app.modalities() {
        let window = synth(kind, &params, &app.sensor_spec(kind))?;
        let vector = extract(&window, &catalog)?;
        let plan = catalog.modality(kind)?;
        println!(
            "  {kind:>3}: {:>3} features (subset keeps {:>2}) | first: {} = {:.3}",
            vector.values.len(),
            plan.uncertain_subset.len(),
            plan.features[0],
            vector.values[0],
        );
        parts.insert(kind, vector);
    }

    let full = catalog.full_masks();
    let fused = fuse(&catalog, &parts, &full)?;
    println!("\nfull fusion: {} values (valid: {})", fused.values.len(), fused.valid);

    // The most degraded preset: heart and muscle channels dropped, pulse
    // and electrodermal channels pruned to their subsets.
    let reduced: BTreeMap<ModalityKind, FeatureMask> = [
        (ModalityKind::Ecg, FeatureMask::Empty),
        (ModalityKind::Emg, FeatureMask::Empty),
        (ModalityKind::Ppg, FeatureMask::Subset),
        (ModalityKind::Eda, FeatureMask::Subset),
    ]
    .into();
    let pruned = fuse(&catalog, &parts, &reduced)?;
    let retention = catalog.retention(&reduced);
    println!(
        "reduced fusion: {} values = {}/{} of the full set ({:.3} %)",
        pruned.values.len(),
        retention.numer(),
        retention.denom(),
        100.0 * *retention.numer() as f64 / *retention.denom() as f64,
    );
    assert_eq!(pruned.values.len(), catalog.retained_count(&reduced));
    Ok(())
}

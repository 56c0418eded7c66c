//! Adaptive multimodal sensing for eHealth applications, simulated end to end.
//!
//! The library models a closed loop around a multimodal biosignal pipeline
//! (ECG, EMG, PPG, EDA): per-window signal-quality monitoring labels each
//! modality Reliable, Uncertain, or Noisy; a rule-based controller drops noisy
//! modalities, prunes features of uncertain ones, and selects a matching
//! classifier from a pre-trained pool; a cost model accounts for the sensor
//! energy, edge energy, latency, and transmitted data volume saved by each
//! decision.
//!
//! Everything runs on deterministic synthetic signals, so scenario runs are
//! reproducible bit for bit under fixed seeds.
//!
//! # Module map
//!
//! - [`signals`] — domain types, synthetic generators, segmentation, CSV I/O
//! - [`noise`] — baseline-wander and motion-artifact injection at target SNR
//! - [`dsp`] — zero-phase FIR filtering, peak detection, RR intervals, Welch PSD
//! - [`features`] — per-modality feature catalogs, extraction, early fusion
//! - [`monitor`] — blind SNR, quality thresholds, discrepancy rules, labeling
//! - [`controller`] — label-driven sensing/mask/model decisions and recovery
//! - [`models`] — synthetic datasets, training, the keyed model pool, inference
//! - [`cost`] — energy/latency/data-volume accounting and calibration fitting
//! - [`harness`] — scenario presets, the per-window loop, suite reports
//! - [`config`] — bundled configuration files and the override search path
//!
//! # Quick start
//!
//! ```
//! use amser::config;
//! use amser::harness::{self, ScenarioSpec};
//! use amser::models::ModelPool;
//! use amser::signals::Application;
//!
//! let catalog = config::load_catalog(Application::Pain).unwrap();
//! let pool = ModelPool::train_default(Application::Pain, &catalog, 8).unwrap();
//! let calibration = config::load_calibration().unwrap();
//! let spec = ScenarioSpec::preset(Application::Pain, "S4").unwrap();
//! let report = harness::run_scenario(&spec, &pool, &catalog, &calibration, &[7], 4).unwrap();
//! assert!(report.windows.iter().all(|w| !w.decision.sensing.is_on(amser::signals::ModalityKind::Ecg)));
//! ```

pub mod config;
pub mod controller;
pub mod cost;
pub mod dsp;
pub mod error;
pub mod features;
pub mod harness;
pub mod models;
pub mod monitor;
pub mod noise;
pub mod signals;

pub use error::{AmserError, Result};

//! End-to-end tests of the `amser` binary: every subcommand, the scenario
//! file path, report shapes, exit codes, and the configuration override
//! directory.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::OnceLock;

use amser::config;
use amser::harness::{NoisePlanEntry, RunReport, ScenarioSpec, SuiteReport};
use amser::models::ModelPool;
use amser::monitor::QualityLabel;
use amser::noise::NoiseKind;
use amser::signals::{Application, ModalityKind};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_amser"))
}

fn scratch(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join("cli").join(name);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn stderr_of(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

/// A stress pool trained once by the binary itself and reused by every
/// test that needs `--pool`.
fn stress_pool() -> &'static Path {
    static POOL: OnceLock<PathBuf> = OnceLock::new();
    POOL.get_or_init(|| {
        let path = scratch("shared").join("stress-pool.bin");
        let output = bin()
            .args(["train", "--app", "stress", "--out"])
            .arg(&path)
            .output()
            .unwrap();
        assert!(output.status.success(), "train failed: {}", stderr_of(&output));
        path
    })
}

#[test]
fn train_writes_a_pool_the_library_can_load() {
    let path = stress_pool();
    let pool = ModelPool::load(path).unwrap();
    assert_eq!(pool.application, Application::Stress);
    assert_eq!(
        pool.models.len(),
        26,
        "every non-empty modality mask combination gets a model"
    );
}

#[test]
fn train_honors_sample_count_and_seed() {
    let dir = scratch("train-small");
    let path = dir.join("small.bin");
    let output = bin()
        .args(["train", "--app", "stress", "--samples", "6", "--seed", "11", "--out"])
        .arg(&path)
        .output()
        .unwrap();
    assert!(output.status.success(), "{}", stderr_of(&output));
    let pool = ModelPool::load(&path).unwrap();
    assert_eq!(pool.n_per_class, 6);
    assert_eq!(pool.seed, 11);
}

#[test]
fn run_accepts_a_scenario_file_and_reports_the_outcome() {
    let dir = scratch("run-file");
    let spec = ScenarioSpec {
        application: Application::Stress,
        name: "eda-detached".into(),
        noise: [(
            ModalityKind::Eda,
            vec![
                NoisePlanEntry {
                    kind: NoiseKind::Bw,
                    target_snr_db: 3.0,
                    burst_density: None,
                },
                NoisePlanEntry {
                    kind: NoiseKind::Ma,
                    target_snr_db: 3.0,
                    burst_density: None,
                },
            ],
        )]
        .into(),
        noise_until_window: None,
    };
    let scenario_path = dir.join("scenario.json");
    std::fs::write(&scenario_path, serde_json::to_string_pretty(&spec).unwrap()).unwrap();

    let report_path = dir.join("report.json");
    let output = bin()
        .args(["run", "--app", "stress", "--seeds", "1", "--windows", "3", "--scenario"])
        .arg(&scenario_path)
        .arg("--pool")
        .arg(stress_pool())
        .arg("--report")
        .arg(&report_path)
        .output()
        .unwrap();
    assert!(output.status.success(), "{}", stderr_of(&output));

    let report: RunReport =
        serde_json::from_str(&std::fs::read_to_string(&report_path).unwrap()).unwrap();
    assert_eq!(report.scenario, "eda-detached");
    assert_eq!(report.windows.len(), 3);
    let last = report.windows.last().unwrap();
    assert_eq!(
        last.decision.labels[&ModalityKind::Eda],
        QualityLabel::Noisy,
        "a 0 dB electrodermal channel should be flagged and dropped"
    );
    assert_eq!(
        last.decision.labels[&ModalityKind::Ecg],
        QualityLabel::Reliable
    );
}

#[test]
fn run_check_passes_on_a_preset() {
    let status = bin()
        .args(["run", "--app", "stress", "--scenario", "S2", "--seeds", "2", "--windows", "6",
            "--check", "--pool"])
        .arg(stress_pool())
        .status()
        .unwrap();
    assert!(status.success());
}

#[test]
fn suite_check_passes_and_report_parses() {
    let dir = scratch("suite");
    let report_path = dir.join("suite.json");
    let output = bin()
        .args(["suite", "--app", "stress", "--seeds", "2", "--windows", "6", "--check",
            "--pool"])
        .arg(stress_pool())
        .arg("--report")
        .arg(&report_path)
        .output()
        .unwrap();
    assert!(output.status.success(), "{}", stderr_of(&output));

    let report: SuiteReport =
        serde_json::from_str(&std::fs::read_to_string(&report_path).unwrap()).unwrap();
    assert!(report.all_pass);
    assert_eq!(report.rows.len(), 4);
    assert!(report.rows.iter().all(|r| r.pass));
}

#[test]
fn fit_calibration_reproduces_the_bundled_files() {
    let dir = scratch("fit");
    let status = bin()
        .args(["fit-calibration", "--out-dir"])
        .arg(&dir)
        .status()
        .unwrap();
    assert!(status.success());
    let written = std::fs::read_to_string(dir.join("calibration.json")).unwrap();
    assert_eq!(written, config::read_config("calibration.json").unwrap());
    let residuals = std::fs::read_to_string(dir.join("calibration.residuals.json")).unwrap();
    assert_eq!(
        residuals,
        config::read_config("calibration.residuals.json").unwrap()
    );
}

#[test]
fn config_dir_override_shadows_the_bundled_presets() {
    let dir = scratch("override");
    let mut presets: serde_json::Value =
        serde_json::from_str(&config::read_config("presets.json").unwrap()).unwrap();
    presets["presets"].as_array_mut().unwrap().push(serde_json::json!({
        "application": "stress",
        "name": "S9",
        "noise": {},
        "noise_until_window": null
    }));
    std::fs::write(
        dir.join("presets.json"),
        serde_json::to_string_pretty(&presets).unwrap(),
    )
    .unwrap();

    let mut args = bin();
    args.args(["run", "--app", "stress", "--scenario", "S9", "--seeds", "1", "--windows", "2",
        "--pool"])
        .arg(stress_pool());

    // Without the override the preset does not exist.
    let output = args.output().unwrap();
    assert_eq!(output.status.code(), Some(2));
    assert!(
        stderr_of(&output).contains("S9"),
        "error should name the missing preset"
    );

    // With it, the same invocation runs the added clean scenario.
    let status = args.env(config::CONFIG_DIR_ENV, &dir).status().unwrap();
    assert!(status.success());
}

#[test]
fn mismatched_pool_and_invalid_scenario_exit_two() {
    let status = bin()
        .args(["run", "--app", "pain", "--scenario", "S1", "--seeds", "1", "--windows", "1",
            "--pool"])
        .arg(stress_pool())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2), "a stress pool cannot serve pain");

    let dir = scratch("bad-scenario");
    let path = dir.join("bad.json");
    std::fs::write(
        &path,
        r#"{"application": "stress", "name": "bad", "noise": {"EMG": []}}"#,
    )
    .unwrap();
    let output = bin()
        .args(["run", "--app", "stress", "--seeds", "1", "--windows", "1", "--scenario"])
        .arg(&path)
        .arg("--pool")
        .arg(stress_pool())
        .output()
        .unwrap();
    assert_eq!(
        output.status.code(),
        Some(2),
        "muscle activity is not a stress modality: {}",
        stderr_of(&output)
    );
}

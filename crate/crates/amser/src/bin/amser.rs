//! Thin command-line front end over the library.
//!
//! Four subcommands cover the operational surface: `train` builds and
//! saves a model pool, `run` plays one scenario through the closed loop,
//! `suite` checks every preset against the published expectations, and
//! `fit-calibration` regenerates the cost calibration from the targets.
//! Passing `--check` makes a command exit nonzero when its results deviate
//! from what is expected, so scripts can gate on it.
//!
//! Configuration files come bundled; point `AMSER_CONFIG_DIR` at a
//! directory to override individual files by name.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use amser::config;
use amser::cost::Calibration;
use amser::error::{AmserError, Result};
use amser::harness::{self, ScenarioSpec, SuiteReport};
use amser::models::{ModelAlgo, ModelPool, DEFAULT_N_PER_CLASS, DEFAULT_TRAIN_SEED};
use amser::signals::Application;

#[derive(Parser)]
#[command(
    name = "amser",
    version,
    about = "Adaptive multimodal sensing simulator",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train the model pool for an application and save it.
    Train(TrainArgs),
    /// Play one scenario through the closed loop and report the results.
    Run(RunArgs),
    /// Run every preset scenario and compare against the published
    /// expectations.
    Suite(SuiteArgs),
    /// Refit the cost calibration from the published targets.
    FitCalibration(FitArgs),
}

#[derive(Args)]
struct TrainArgs {
    /// Application: pain or stress.
    #[arg(long)]
    app: String,
    /// Where to save the trained pool.
    #[arg(long)]
    out: PathBuf,
    /// Training samples per class.
    #[arg(long, default_value_t = DEFAULT_N_PER_CLASS)]
    samples: usize,
    /// Classifier family: centroid or linear.
    #[arg(long, default_value = "centroid")]
    algo: String,
    /// Dataset seed.
    #[arg(long, default_value_t = DEFAULT_TRAIN_SEED)]
    seed: u64,
}

#[derive(Args)]
struct RunArgs {
    /// Application: pain or stress.
    #[arg(long)]
    app: String,
    /// Preset name (S1..S4) or path to a scenario JSON file.
    #[arg(long)]
    scenario: String,
    /// Trained pool file; trains one in memory when omitted.
    #[arg(long)]
    pool: Option<PathBuf>,
    /// Calibration JSON file; the bundled one when omitted.
    #[arg(long)]
    calibration: Option<PathBuf>,
    /// Number of seeded runs (seeds 0..N).
    #[arg(long, default_value_t = 5)]
    seeds: u64,
    /// Windows per run.
    #[arg(long, default_value_t = 8)]
    windows: u32,
    /// Write the full JSON report here.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Exit nonzero unless the run matches the published expectations
    /// (presets) and the report is self-consistent.
    #[arg(long)]
    check: bool,
}

#[derive(Args)]
struct SuiteArgs {
    /// Application: pain or stress.
    #[arg(long)]
    app: String,
    /// Trained pool file; trains one in memory when omitted.
    #[arg(long)]
    pool: Option<PathBuf>,
    /// Training samples per class for the in-memory pool.
    #[arg(long, default_value_t = DEFAULT_N_PER_CLASS)]
    samples: usize,
    /// Number of seeded runs per scenario (seeds 0..N).
    #[arg(long, default_value_t = 3)]
    seeds: u64,
    /// Windows per run.
    #[arg(long, default_value_t = 8)]
    windows: u32,
    /// Write the full JSON report here.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Exit nonzero unless every scenario passes.
    #[arg(long)]
    check: bool,
}

#[derive(Args)]
struct FitArgs {
    /// Directory receiving calibration.json and calibration.residuals.json.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    /// Exit nonzero unless the fit is exact and reproduces the bundled
    /// calibration byte for byte.
    #[arg(long)]
    check: bool,
}

fn parse_app(name: &str) -> Result<Application> {
    match name.to_ascii_lowercase().as_str() {
        "pain" => Ok(Application::Pain),
        "stress" => Ok(Application::Stress),
        other => Err(AmserError::InvalidParam(format!(
            "unknown application `{other}` (expected pain or stress)"
        ))),
    }
}

fn parse_algo(name: &str) -> Result<ModelAlgo> {
    match name.to_ascii_lowercase().as_str() {
        "centroid" => Ok(ModelAlgo::Centroid),
        "linear" => Ok(ModelAlgo::Linear),
        other => Err(AmserError::InvalidParam(format!(
            "unknown algorithm `{other}` (expected centroid or linear)"
        ))),
    }
}

fn load_or_train_pool(
    application: Application,
    path: Option<&Path>,
    samples: usize,
) -> Result<ModelPool> {
    match path {
        Some(path) => {
            let pool = ModelPool::load(path)?;
            if pool.application != application {
                return Err(AmserError::InvalidParam(format!(
                    "pool at {} is for {}, not {application}",
                    path.display(),
                    pool.application
                )));
            }
            Ok(pool)
        }
        None => {
            eprintln!("no --pool given; training a {application} pool in memory…");
            let catalog = config::load_catalog(application)?;
            ModelPool::train_default(application, &catalog, samples)
        }
    }
}

fn load_calibration_arg(path: Option<&Path>) -> Result<Calibration> {
    match path {
        Some(path) => {
            let calibration: Calibration =
                serde_json::from_str(&fs::read_to_string(path)?)?;
            calibration.validate()?;
            Ok(calibration)
        }
        None => config::load_calibration(),
    }
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn cmd_train(args: &TrainArgs) -> Result<bool> {
    let application = parse_app(&args.app)?;
    let algo = parse_algo(&args.algo)?;
    let catalog = config::load_catalog(application)?;
    let pool = ModelPool::train(application, &catalog, args.samples, args.seed, algo)?;
    pool.save(&args.out)?;
    println!(
        "trained {} {} models ({} samples/class, seed {}) -> {}",
        pool.models.len(),
        application,
        args.samples,
        args.seed,
        args.out.display()
    );
    Ok(true)
}

fn cmd_run(args: &RunArgs) -> Result<bool> {
    let application = parse_app(&args.app)?;
    let path = Path::new(&args.scenario);
    let (spec, is_preset) = if path.is_file() {
        (ScenarioSpec::from_file(path)?, false)
    } else {
        (ScenarioSpec::preset(application, &args.scenario)?, true)
    };
    if spec.application != application {
        return Err(AmserError::InvalidParam(format!(
            "scenario `{}` is for {}, not {application}",
            spec.name, spec.application
        )));
    }
    let pool = load_or_train_pool(application, args.pool.as_deref(), DEFAULT_N_PER_CLASS)?;
    let calibration = load_calibration_arg(args.calibration.as_deref())?;
    let catalog = config::load_catalog(application)?;
    if args.seeds == 0 {
        return Err(AmserError::InvalidParam("need at least one seed".into()));
    }
    let seeds: Vec<u64> = (0..args.seeds).collect();
    let report =
        harness::run_scenario(&spec, &pool, &catalog, &calibration, &seeds, args.windows)?;

    println!(
        "{application} {}: accuracy {:.3} vs baseline {:.3} over {} seeds x {} windows",
        spec.name, report.adaptive_accuracy, report.baseline_accuracy, args.seeds, args.windows
    );
    if let Some(gains) = &report.gains {
        println!(
            "  steady state: volume {:.2}%, sensor gain {:.2}, edge gain {:.2}, speedup {:.2}",
            gains.volume_pct, gains.sensor_gain, gains.edge_gain, gains.speedup
        );
    }
    if let Some(path) = &args.report {
        write_json(path, &report)?;
        println!("  report -> {}", path.display());
    }

    if !args.check {
        return Ok(true);
    }
    let mut ok = true;
    // Self-consistency: aggregates must recompute from the records.
    for stats in &report.seed_stats {
        let windows: Vec<_> = report
            .windows
            .iter()
            .filter(|w| w.seed == stats.seed)
            .collect();
        let hits = windows
            .iter()
            .filter(|w| w.predicted_class == Some(w.truth_class))
            .count();
        if (stats.adaptive_accuracy - hits as f64 / windows.len() as f64).abs() > 1e-12 {
            eprintln!("check failed: seed {} accuracy does not recompute", stats.seed);
            ok = false;
        }
    }
    if is_preset {
        let suite = harness::run_suite(
            application,
            &pool,
            &catalog,
            &calibration,
            &seeds,
            args.windows,
        )?;
        let row = suite
            .rows
            .iter()
            .find(|r| r.scenario == spec.name)
            .ok_or_else(|| {
                AmserError::MissingResource(format!("no published row for {}", spec.name))
            })?;
        if !row.pass {
            eprintln!("check failed: {} deviates from the published expectations", spec.name);
            ok = false;
        }
    }
    if ok {
        println!("  check: ok");
    }
    Ok(ok)
}

fn print_suite(report: &SuiteReport) {
    for row in &report.rows {
        let reduction = row
            .reduction
            .map(|r| format!("{:.3} (exp {:.3})", r.value, r.expected))
            .unwrap_or_else(|| "-".into());
        println!(
            "{} {}: labels {} | volume {:.2}% (exp {:.2}%) | reduction {} | gains {:.2}/{:.2}/{:.2} (exp {:.2}/{:.2}/{:.2}) | acc {:.3} vs {:.3} | {}",
            report.application,
            row.scenario,
            if row.decisions_match { "ok" } else { "MISMATCH" },
            row.volume_pct.value,
            row.volume_pct.expected,
            reduction,
            row.sensor_gain.value,
            row.edge_gain.value,
            row.speedup.value,
            row.sensor_gain.expected,
            row.edge_gain.expected,
            row.speedup.expected,
            row.adaptive_accuracy,
            row.baseline_accuracy,
            if row.pass { "pass" } else { "FAIL" },
        );
    }
    println!(
        "{}: {}",
        report.application,
        if report.all_pass { "all scenarios pass" } else { "FAILURES present" }
    );
}

fn cmd_suite(args: &SuiteArgs) -> Result<bool> {
    let application = parse_app(&args.app)?;
    let pool = load_or_train_pool(application, args.pool.as_deref(), args.samples)?;
    let catalog = config::load_catalog(application)?;
    let calibration = config::load_calibration()?;
    if args.seeds == 0 {
        return Err(AmserError::InvalidParam("need at least one seed".into()));
    }
    let seeds: Vec<u64> = (0..args.seeds).collect();
    let report = harness::run_suite(
        application,
        &pool,
        &catalog,
        &calibration,
        &seeds,
        args.windows,
    )?;
    print_suite(&report);
    if let Some(path) = &args.report {
        write_json(path, &report)?;
        println!("report -> {}", path.display());
    }
    Ok(!args.check || report.all_pass)
}

fn cmd_fit(args: &FitArgs) -> Result<bool> {
    let (calibration, residuals) = config::fit_all()?;
    fs::create_dir_all(&args.out_dir)?;
    let calibration_text = serde_json::to_string_pretty(&calibration)?;
    fs::write(args.out_dir.join("calibration.json"), &calibration_text)?;
    fs::write(
        args.out_dir.join("calibration.residuals.json"),
        serde_json::to_string_pretty(&residuals)?,
    )?;
    let mut worst: f64 = 0.0;
    for r in &residuals {
        println!("{}: max |residual| = {:.3e}", r.application, r.max_abs_residual);
        worst = worst.max(r.max_abs_residual);
    }
    println!("calibration -> {}", args.out_dir.join("calibration.json").display());

    if !args.check {
        return Ok(true);
    }
    let mut ok = true;
    if worst >= 1e-9 {
        eprintln!("check failed: fit residual {worst:e} exceeds 1e-9");
        ok = false;
    }
    if calibration_text != config::read_config("calibration.json")? {
        eprintln!("check failed: refit differs from the bundled calibration");
        ok = false;
    }
    if ok {
        println!("check: ok");
    }
    Ok(ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Train(args) => cmd_train(args),
        Command::Run(args) => cmd_run(args),
        Command::Suite(args) => cmd_suite(args),
        Command::FitCalibration(args) => cmd_fit(args),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(2)
        }
    }
}

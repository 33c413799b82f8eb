//! Command-line surface: argument parsing, command dispatch and exit-code
//! policy.
//!
//! Exit codes: 0 success, 2 usage or parse errors (including config syntax),
//! 3 invariant violations, 4 numerical failures, 1 filesystem failures.
//! Argument-level errors exit through clap with code 2 before `run` starts.

use std::fs;
use std::io::Write as IoWrite;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Parser, Subcommand};

use crate::analysis::{AnalysisError, DfeConvention};
use crate::ensemble::{run_ensemble, EnsembleError, EnsembleSummary};
use crate::integrate::{integrate_ode, integrate_sde, IntegrateError, SeedSpec, Trajectory};
use crate::model::NoiseIntensities;
use crate::render::{
    analysis_report, ensemble_csv, metrics_text, provenance_header, sweep_csv, trajectory_csv,
    SweepSeries,
};
use crate::scenario::{
    figure_scenario, parse_config, validate_dfe_override, ConfigError, FigureId, ScenarioConfig,
    SweepSettings, SweepTarget, DEFAULT_ENSEMBLE_PATHS, DEFAULT_MASTER_SEED,
};

/// Deterministic and stochastic SQEAIHR epidemic model toolkit.
#[derive(Debug, Parser)]
#[command(name = "sqeaihr", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print reproduction number, equilibria, stability and
    /// extinction/persistence thresholds for a scenario.
    Analyze {
        /// Scenario file; omitted means the built-in defaults.
        #[arg(long, value_name = "FILE")]
        config: Option<PathBuf>,
        /// Disease-free convention: `formula` or `override:VALUE`.
        #[arg(long, value_name = "CONVENTION", value_parser = parse_dfe_flag)]
        dfe: Option<DfeConvention>,
    },
    /// Integrate one trajectory and emit it as CSV.
    Simulate {
        #[arg(long, value_name = "FILE")]
        config: Option<PathBuf>,
        /// Output file; omitted means standard output.
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Run a seeded Monte Carlo ensemble; emit summary CSV and metrics.
    Ensemble {
        #[arg(long, value_name = "FILE")]
        config: Option<PathBuf>,
        /// Overrides `ensemble.paths` from the config.
        #[arg(long, value_name = "N")]
        paths: Option<usize>,
        /// Overrides `ensemble.seed` from the config.
        #[arg(long, value_name = "S")]
        seed: Option<u64>,
        /// Directory for summary.csv and metrics.txt; omitted means CSV on
        /// standard output with metrics on the error stream.
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
    /// Sweep one control parameter and emit I_total trajectories as CSV.
    Sweep {
        #[arg(long, value_name = "FILE")]
        config: Option<PathBuf>,
        /// Overrides `sweep.target`: beta2, lam or q.
        #[arg(long, value_name = "PARAM", value_parser = SweepTarget::from_str)]
        target: Option<SweepTarget>,
        /// Overrides `sweep.values` (comma separated).
        #[arg(long, value_name = "V1,V2,...", value_delimiter = ',')]
        values: Option<Vec<f64>>,
    },
    /// Regenerate the data files behind one bundled figure scenario.
    Replicate {
        /// fig1 through fig7.
        #[arg(value_name = "FIGID", value_parser = FigureId::from_str)]
        figure: FigureId,
        /// Output directory (created if missing); default current dir.
        #[arg(long, value_name = "DIR", default_value = ".")]
        out: PathBuf,
    },
}

fn parse_dfe_flag(raw: &str) -> Result<DfeConvention, String> {
    if raw == "formula" {
        return Ok(DfeConvention::Formula);
    }
    if let Some(v) = raw.strip_prefix("override:") {
        let value: f64 = v
            .parse()
            .map_err(|_| format!("override value is not a number: `{v}`"))?;
        if !(value.is_finite() && value > 0.0) {
            return Err(format!("override value must be finite and > 0, got {value}"));
        }
        return Ok(DfeConvention::Override(value));
    }
    Err(format!(
        "expected `formula` or `override:VALUE`, got `{raw}`"
    ))
}

/// Failures after argument parsing, with their exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Unreadable input or malformed config text (exit 2).
    Usage(String),
    /// Structurally valid input violating a model or scenario invariant
    /// (exit 3).
    Validation(String),
    /// Integration or eigenvalue failure (exit 4).
    Numerical(String),
    /// Filesystem failure writing outputs (exit 1).
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Validation(_) => 3,
            CliError::Numerical(_) => 4,
            CliError::Io(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m)
            | CliError::Validation(m)
            | CliError::Numerical(m)
            | CliError::Io(m) => f.write_str(m),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(err: ConfigError) -> Self {
        match err {
            ConfigError::Invalid(_) => CliError::Validation(err.to_string()),
            _ => CliError::Usage(err.to_string()),
        }
    }
}

impl From<IntegrateError> for CliError {
    fn from(err: IntegrateError) -> Self {
        match err {
            IntegrateError::NonFinite { .. } => CliError::Numerical(err.to_string()),
            _ => CliError::Validation(err.to_string()),
        }
    }
}

impl From<EnsembleError> for CliError {
    fn from(err: EnsembleError) -> Self {
        match err {
            EnsembleError::PathFailed { .. } => CliError::Numerical(err.to_string()),
            _ => CliError::Validation(err.to_string()),
        }
    }
}

impl From<AnalysisError> for CliError {
    fn from(err: AnalysisError) -> Self {
        CliError::Numerical(err.to_string())
    }
}

fn load_config(path: Option<&Path>) -> Result<ScenarioConfig, CliError> {
    let text = match path {
        None => String::new(),
        Some(p) => fs::read_to_string(p)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", p.display())))?,
    };
    Ok(parse_config(&text)?)
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents)
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

fn print_stdout(contents: &str) -> Result<(), CliError> {
    std::io::stdout()
        .lock()
        .write_all(contents.as_bytes())
        .map_err(|e| CliError::Io(format!("cannot write to standard output: {e}")))
}

/// Single trajectory for a config: RK4 when no noise is configured,
/// one Euler-Maruyama path (path_index 0 under the ensemble seed) otherwise.
fn simulate_trajectory(config: &ScenarioConfig) -> Result<Trajectory, CliError> {
    match &config.noise {
        None => Ok(integrate_ode(
            &config.params,
            &config.init,
            &config.integrator,
        )?),
        Some(noise) => {
            let master_seed = config
                .ensemble
                .map(|e| e.seed)
                .unwrap_or(DEFAULT_MASTER_SEED);
            Ok(integrate_sde(
                &config.params,
                noise,
                &config.init,
                &config.integrator,
                SeedSpec {
                    master_seed,
                    path_index: 0,
                },
            )?)
        }
    }
}

fn ensemble_summary(config: &ScenarioConfig) -> Result<EnsembleSummary, CliError> {
    let settings = config.ensemble.ok_or_else(|| {
        CliError::Validation(
            "ensemble runs need ensemble.paths (config key or --paths flag)".to_string(),
        )
    })?;
    let zero = NoiseIntensities::zero();
    let noise = config.noise.as_ref().unwrap_or(&zero);
    Ok(run_ensemble(
        &config.params,
        noise,
        &config.init,
        &config.integrator,
        settings.seed,
        settings.paths,
    )?)
}

/// Runs every sweep value and reduces each run to its I_total series.
///
/// All values are validated against the model invariants before the first
/// integration starts. Stochastic configs sweep the ensemble mean path
/// (paths/seed from the ensemble block, defaulting to 100 under seed 42).
fn run_sweep(config: &ScenarioConfig) -> Result<(SweepTarget, Vec<SweepSeries>), CliError> {
    let sweep = config.sweep.as_ref().ok_or_else(|| {
        CliError::Validation(
            "sweep runs need sweep.target and sweep.values (config keys or --target/--values)"
                .to_string(),
        )
    })?;

    let mut staged = Vec::with_capacity(sweep.values.len());
    for &value in &sweep.values {
        let params = sweep
            .target
            .apply(&config.params.raw(), value)
            .validate()
            .map_err(|e| {
                CliError::Validation(format!("sweep value {value} for {}: {e}", sweep.target))
            })?;
        staged.push((value, params));
    }

    let mut series = Vec::with_capacity(staged.len());
    for (value, params) in staged {
        let reduced = match &config.noise {
            None => {
                let traj = integrate_ode(&params, &config.init, &config.integrator)?;
                SweepSeries::from_trajectory(value, &traj)
            }
            Some(noise) => {
                let (paths, seed) = config
                    .ensemble
                    .map(|e| (e.paths, e.seed))
                    .unwrap_or((DEFAULT_ENSEMBLE_PATHS, DEFAULT_MASTER_SEED));
                let summary =
                    run_ensemble(&params, noise, &config.init, &config.integrator, seed, paths)?;
                SweepSeries::from_trajectory(value, &summary.mean_trajectory())
            }
        };
        series.push(reduced);
    }
    Ok((sweep.target, series))
}

fn cmd_analyze(config: Option<&Path>, dfe: Option<DfeConvention>) -> Result<(), CliError> {
    let mut scenario = load_config(config)?;
    if let Some(convention) = dfe {
        if let DfeConvention::Override(value) = convention {
            validate_dfe_override(&scenario.params, value)?;
        }
        scenario.dfe = convention;
    }
    print_stdout(&analysis_report(&scenario)?)
}

fn cmd_simulate(config: Option<&Path>, out: Option<&Path>) -> Result<(), CliError> {
    let scenario = load_config(config)?;
    let csv = trajectory_csv(&simulate_trajectory(&scenario)?);
    match out {
        None => print_stdout(&csv),
        Some(path) => write_file(path, &csv),
    }
}

fn cmd_ensemble(
    config: Option<&Path>,
    paths: Option<usize>,
    seed: Option<u64>,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let mut scenario = load_config(config)?;
    if paths == Some(0) {
        return Err(CliError::Validation("--paths must be >= 1".to_string()));
    }
    if paths.is_some() || seed.is_some() {
        let base = scenario.ensemble.unwrap_or(crate::scenario::EnsembleSettings {
            paths: DEFAULT_ENSEMBLE_PATHS,
            seed: DEFAULT_MASTER_SEED,
        });
        scenario.ensemble = Some(crate::scenario::EnsembleSettings {
            paths: paths.unwrap_or(base.paths),
            seed: seed.unwrap_or(base.seed),
        });
    }
    let summary = ensemble_summary(&scenario)?;
    let csv = ensemble_csv(&summary);
    let metrics = metrics_text(&summary);
    match out {
        None => {
            print_stdout(&csv)?;
            eprint!("{metrics}");
            Ok(())
        }
        Some(dir) => {
            fs::create_dir_all(dir)
                .map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))?;
            write_file(&dir.join("summary.csv"), &csv)?;
            write_file(&dir.join("metrics.txt"), &metrics)
        }
    }
}

fn cmd_sweep(
    config: Option<&Path>,
    target: Option<SweepTarget>,
    values: Option<Vec<f64>>,
) -> Result<(), CliError> {
    let mut scenario = load_config(config)?;
    match (target, values) {
        (Some(target), Some(values)) => {
            if values.is_empty() {
                return Err(CliError::Validation(
                    "--values must list at least one value".to_string(),
                ));
            }
            scenario.sweep = Some(SweepSettings { target, values });
        }
        (None, None) => {}
        (Some(_), None) | (None, Some(_)) => {
            return Err(CliError::Validation(
                "--target and --values must be given together".to_string(),
            ))
        }
    }
    let (target, series) = run_sweep(&scenario)?;
    print_stdout(&sweep_csv(target, &series))
}

fn cmd_replicate(figure: FigureId, out: &Path) -> Result<(), CliError> {
    fs::create_dir_all(out)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", out.display())))?;
    for (stem, config) in figure_scenario(figure).runs {
        let header = provenance_header(&stem, &config);
        let payload = if config.sweep.is_some() {
            let (target, series) = run_sweep(&config)?;
            sweep_csv(target, &series)
        } else if config.ensemble.is_some() {
            let summary = ensemble_summary(&config)?;
            let metrics_path = out.join(format!("{stem}_metrics.txt"));
            write_file(&metrics_path, &format!("{header}{}", metrics_text(&summary)))?;
            println!("wrote {}", metrics_path.display());
            ensemble_csv(&summary)
        } else {
            trajectory_csv(&simulate_trajectory(&config)?)
        };
        let csv_path = out.join(format!("{stem}.csv"));
        write_file(&csv_path, &format!("{header}{payload}"))?;
        println!("wrote {}", csv_path.display());
    }
    Ok(())
}

/// Dispatches a parsed command line. Errors propagate to `main`, which
/// prints them on the error stream and maps them to exit codes.
pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Analyze { config, dfe } => cmd_analyze(config.as_deref(), dfe),
        Command::Simulate { config, out } => cmd_simulate(config.as_deref(), out.as_deref()),
        Command::Ensemble {
            config,
            paths,
            seed,
            out,
        } => cmd_ensemble(config.as_deref(), paths, seed, out.as_deref()),
        Command::Sweep {
            config,
            target,
            values,
        } => cmd_sweep(config.as_deref(), target, values),
        Command::Replicate { figure, out } => cmd_replicate(figure, &out),
    }
}

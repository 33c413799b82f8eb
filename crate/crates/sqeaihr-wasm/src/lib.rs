//! Browser surface of the sqeaihr toolkit: the same scenario text the CLI
//! reads goes in, the same analysis report and CSV payloads come out. All
//! heavy lifting stays in the core crate; this layer only maps errors onto
//! `JsError` so a page can show them. The mapping lives in thin exported
//! wrappers because `JsError` can only be built on a wasm target; everything
//! below them is plain Rust and tested natively.
//!
//! Build with `wasm-pack build crates/sqeaihr-wasm --target web` and serve
//! the `www/` directory next to the generated `pkg/`.

use wasm_bindgen::prelude::*;

use sqeaihr::ensemble::run_ensemble;
use sqeaihr::integrate::{integrate_ode, integrate_sde, SeedSpec, Trajectory};
use sqeaihr::model::NoiseIntensities;
use sqeaihr::render::{analysis_report, ensemble_csv, metrics_text, trajectory_csv};
use sqeaihr::scenario::{parse_config, ScenarioConfig, DEFAULT_MASTER_SEED};

fn load(config_text: &str) -> Result<ScenarioConfig, String> {
    parse_config(config_text).map_err(|e| e.to_string())
}

/// One trajectory under the CLI's convention: RK4 when no noise is
/// configured, otherwise path 0 of the configured (or default) master seed.
fn one_trajectory(config: &ScenarioConfig) -> Result<Trajectory, String> {
    match &config.noise {
        None => integrate_ode(&config.params, &config.init, &config.integrator)
            .map_err(|e| e.to_string()),
        Some(noise) => {
            let master_seed = config
                .ensemble
                .map(|e| e.seed)
                .unwrap_or(DEFAULT_MASTER_SEED);
            integrate_sde(
                &config.params,
                noise,
                &config.init,
                &config.integrator,
                SeedSpec {
                    master_seed,
                    path_index: 0,
                },
            )
            .map_err(|e| e.to_string())
        }
    }
}

fn analyze_impl(config_text: &str) -> Result<String, String> {
    let scenario = load(config_text)?;
    analysis_report(&scenario).map_err(|e| e.to_string())
}

fn simulate_impl(config_text: &str) -> Result<String, String> {
    let scenario = load(config_text)?;
    Ok(trajectory_csv(&one_trajectory(&scenario)?))
}

fn ensemble_impl(config_text: &str) -> Result<(String, String), String> {
    let scenario = load(config_text)?;
    let settings = scenario
        .ensemble
        .ok_or_else(|| "ensemble runs need an ensemble.paths key".to_string())?;
    let zero = NoiseIntensities::zero();
    let noise = scenario.noise.as_ref().unwrap_or(&zero);
    let summary = run_ensemble(
        &scenario.params,
        noise,
        &scenario.init,
        &scenario.integrator,
        settings.seed,
        settings.paths,
    )
    .map_err(|e| e.to_string())?;
    Ok((ensemble_csv(&summary), metrics_text(&summary)))
}

/// Threshold analysis of a scenario: the `key = value` report the CLI's
/// `analyze` subcommand prints.
#[wasm_bindgen]
pub fn analyze(config_text: &str) -> Result<String, JsError> {
    analyze_impl(config_text).map_err(|e| JsError::new(&e))
}

/// One trajectory as `time,S,Q,E,A,I,H,R` CSV, matching `sqeaihr simulate`.
#[wasm_bindgen]
pub fn simulate(config_text: &str) -> Result<String, JsError> {
    simulate_impl(config_text).map_err(|e| JsError::new(&e))
}

/// Ensemble summary CSV plus the metrics report.
#[wasm_bindgen]
pub struct EnsembleOutput {
    summary_csv: String,
    metrics: String,
}

#[wasm_bindgen]
impl EnsembleOutput {
    #[wasm_bindgen(getter)]
    pub fn summary_csv(&self) -> String {
        self.summary_csv.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn metrics(&self) -> String {
        self.metrics.clone()
    }
}

/// A seeded Monte Carlo ensemble, matching `sqeaihr ensemble`: the config
/// must carry an `ensemble.paths` key. Zero configured noise is allowed and
/// collapses every path onto the deterministic solution.
#[wasm_bindgen]
pub fn ensemble(config_text: &str) -> Result<EnsembleOutput, JsError> {
    let (summary_csv, metrics) = ensemble_impl(config_text).map_err(|e| JsError::new(&e))?;
    Ok(EnsembleOutput {
        summary_csv,
        metrics,
    })
}

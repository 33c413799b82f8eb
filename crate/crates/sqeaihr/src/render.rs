//! Text emission: trajectory / ensemble / sweep CSV, the analysis report,
//! and provenance headers for replication outputs.
//!
//! Every float prints through `{}` (Rust's shortest exact representation),
//! so emitted numbers reparse to the same bits and whole files are
//! byte-identical across runs, machines and thread counts. Lines end in LF.

use std::fmt::Write;

use crate::analysis::{
    compute_dfe, compute_r0, endemic_equilibrium, extinction_report, jacobian, spectral_bound,
    AnalysisError, DfeConvention,
};
use crate::ensemble::{EnsembleSummary, Selector};
use crate::integrate::Trajectory;
use crate::model::{Compartment, NoiseIntensities, State};
use crate::scenario::{render_config, ScenarioConfig, SweepTarget};

/// Header shared by trajectory CSV and the state columns of ensemble CSV.
pub const TRAJECTORY_HEADER: &str = "time,S,Q,E,A,I,H,R";

fn push_state_fields(out: &mut String, state: &State) {
    let _ = write!(
        out,
        "{},{},{},{},{},{},{}",
        state.s, state.q_c, state.e, state.a, state.i, state.h, state.r
    );
}

/// One row per recorded grid point: `time,S,Q,E,A,I,H,R`.
pub fn trajectory_csv(traj: &Trajectory) -> String {
    let mut out = String::with_capacity(traj.len() * 64 + 32);
    out.push_str(TRAJECTORY_HEADER);
    out.push('\n');
    for (t, state) in traj.times.iter().zip(&traj.states) {
        let _ = write!(out, "{t},");
        push_state_fields(&mut out, state);
        out.push('\n');
    }
    out
}

/// Long-form summary: rows `time,stat,S,...,R` with stat in {mean, q05,
/// q95}, three rows per grid point.
pub fn ensemble_csv(summary: &EnsembleSummary) -> String {
    let mut out = String::with_capacity(summary.grid.len() * 200 + 32);
    out.push_str("time,stat,S,Q,E,A,I,H,R\n");
    for (k, t) in summary.grid.iter().enumerate() {
        for (stat, states) in [
            ("mean", &summary.mean_path),
            ("q05", &summary.band_low),
            ("q95", &summary.band_high),
        ] {
            let _ = write!(out, "{t},{stat},");
            push_state_fields(&mut out, &states[k]);
            out.push('\n');
        }
    }
    out
}

/// The scalar metrics of an ensemble as `key = value` lines.
pub fn metrics_text(summary: &EnsembleSummary) -> String {
    let mut sorted = summary.persistence_stats.clone();
    sorted.sort_unstable_by(f64::total_cmp);
    let median = sorted[(sorted.len() + 1) / 2 - 1];
    let positive = sorted.iter().filter(|&&v| v > 0.0).count();

    let mut out = String::new();
    let _ = writeln!(out, "n_paths = {}", summary.n_paths);
    let _ = writeln!(out, "extinction_fraction = {}", summary.extinction_fraction);
    let _ = writeln!(out, "slope_mean = {}", summary.slope_stats.mean);
    let _ = writeln!(out, "slope_std = {}", summary.slope_stats.std);
    let _ = writeln!(out, "slope_defined_paths = {}", summary.slope_stats.n);
    let _ = writeln!(out, "persistence_median = {median}");
    let _ = writeln!(
        out,
        "persistence_positive_fraction = {}",
        positive as f64 / summary.n_paths as f64
    );
    out
}

/// One swept trajectory reduced to its total infected series E+A+I.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSeries {
    pub value: f64,
    pub times: Vec<f64>,
    pub i_total: Vec<f64>,
}

impl SweepSeries {
    /// Reduces a trajectory to its I_total series.
    pub fn from_trajectory(value: f64, traj: &Trajectory) -> Self {
        let obs = Selector::infected_total();
        SweepSeries {
            value,
            times: traj.times.clone(),
            i_total: traj.states.iter().map(|s| obs.apply(s)).collect(),
        }
    }
}

/// Long-form sweep output: `sweep_param,sweep_value,time,I_total`, grouped
/// by sweep value in input order.
pub fn sweep_csv(target: SweepTarget, series: &[SweepSeries]) -> String {
    let mut out = String::from("sweep_param,sweep_value,time,I_total\n");
    for s in series {
        for (t, i_total) in s.times.iter().zip(&s.i_total) {
            let _ = writeln!(out, "{target},{},{t},{i_total}", s.value);
        }
    }
    out
}

/// The full analysis report as greppable `key = value` lines.
///
/// Reports both disease-free conventions whenever an override is active,
/// states whether thresholds used configured or zero noise, and prints the
/// endemic state or `none`. Never fails on a valid config except when the
/// eigenvalue iteration does not converge.
pub fn analysis_report(config: &ScenarioConfig) -> Result<String, AnalysisError> {
    let params = &config.params;
    let (s_o, q_o) = config.dfe.resolve(params);
    let dfe_state = State::new(s_o, q_o, 0.0, 0.0, 0.0, 0.0, 0.0);
    let bound = spectral_bound(&jacobian(params, &dfe_state))?;
    let zero_noise = NoiseIntensities::zero();
    let noise = config.noise.as_ref().unwrap_or(&zero_noise);
    let thresholds = extinction_report(params, noise, s_o);

    let mut out = String::new();
    let _ = writeln!(out, "# sqeaihr analysis");
    let _ = writeln!(out, "fingerprint = {:#018x}", params.fingerprint());
    let _ = writeln!(
        out,
        "scenario = {}",
        if config.noise.is_some() {
            "stochastic"
        } else {
            "deterministic"
        }
    );
    let _ = writeln!(
        out,
        "dfe_convention = {}",
        match config.dfe {
            DfeConvention::Formula => "formula",
            DfeConvention::Override(_) => "override",
        }
    );
    let _ = writeln!(out, "S_dfe = {s_o}");
    let _ = writeln!(out, "Q_dfe = {q_o}");
    if let DfeConvention::Override(_) = config.dfe {
        let formula = compute_dfe(params);
        let _ = writeln!(out, "S_dfe_formula = {}", formula.s_o);
        let _ = writeln!(out, "Q_dfe_formula = {}", formula.q_o);
        let _ = writeln!(out, "R0_formula = {}", compute_r0(params, formula.s_o));
    }
    let _ = writeln!(out, "R0 = {}", thresholds.r0);
    let _ = writeln!(out, "spectral_bound_dfe = {bound}");
    let _ = writeln!(out, "dfe_locally_stable = {}", bound < 0.0);

    match endemic_equilibrium(params, config.dfe) {
        None => {
            let _ = writeln!(out, "endemic = none");
        }
        Some(star) => {
            let _ = writeln!(out, "endemic = present");
            for c in Compartment::ALL {
                let _ = writeln!(out, "endemic.{} = {}", c.label(), star.get(c));
            }
        }
    }

    if config.noise.is_none() {
        let _ = writeln!(
            out,
            "# no noise intensities configured; thresholds below use zero noise"
        );
    }
    let _ = writeln!(
        out,
        "extinction.half_max_sigma_sq = {}",
        0.5 * noise.max_sq()
    );
    let _ = writeln!(out, "extinction.mu = {}", params.mu());
    let _ = writeln!(
        out,
        "extinction.min_sigma_sq_infected = {}",
        noise.min_sq_infected()
    );
    let _ = writeln!(
        out,
        "extinction.noise_dominance_ok = {}",
        thresholds.noise_dominance_ok
    );
    let _ = writeln!(
        out,
        "extinction.noise_floor_ok = {}",
        thresholds.noise_floor_ok
    );
    let _ = writeln!(out, "extinction.exponent = {}", thresholds.extinction_exponent);
    let _ = writeln!(
        out,
        "extinction.conditions_met = {}",
        thresholds.noise_dominance_ok && thresholds.noise_floor_ok
    );
    let _ = writeln!(out, "persistence.alpha_hat = {}", thresholds.alpha_hat);
    let _ = writeln!(out, "persistence.rho1_at_hat = {}", thresholds.rho1_at_hat);
    let _ = writeln!(out, "persistence.rho2 = {}", thresholds.rho2);
    let _ = writeln!(out, "persistence.margin = {}", thresholds.persistence_margin);
    let _ = writeln!(
        out,
        "persistence.in_mean = {}",
        thresholds.persistence_margin > 0.0
    );
    Ok(out)
}

/// `#`-prefixed provenance block for replication outputs: the run stem,
/// every effective input value (via [`render_config`]), and a note when the
/// override susceptible level disagrees with the closed form.
pub fn provenance_header(stem: &str, config: &ScenarioConfig) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# sqeaihr replicate: {stem}");
    let _ = writeln!(out, "# effective inputs (parsed values, not input strings):");
    for line in render_config(config).lines() {
        let _ = writeln!(out, "# {line}");
    }
    if let DfeConvention::Override(v) = config.dfe {
        let formula = compute_dfe(&config.params);
        if v != formula.s_o {
            let _ = writeln!(
                out,
                "# note: dfe.override = {v} is the published susceptible level; the closed form gives S_dfe = {} (Q_dfe = {})",
                formula.s_o, formula.q_o
            );
        }
    }
    out
}

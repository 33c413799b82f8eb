//! Monte Carlo ensembles over seeded stochastic paths, the running time
//! average ⟨φ⟩(t) = (1/t)∫₀ᵗ φ(s) ds, and the extinction/persistence
//! estimators built on it.
//!
//! Paths may integrate in parallel (the `parallel` feature), but every
//! statistic is reduced sequentially in path-index order, so summaries are
//! bit-identical regardless of thread count.

#[cfg(feature = "parallel")]
use rayon::prelude::*;
use thiserror::Error;

use crate::integrate::{
    integrate_sde, IntegrateError, IntegratorConfig, SeedSpec, Trajectory, TrajectoryMeta,
};
use crate::model::{Compartment, ModelParameters, NoiseIntensities, State};

/// A path counts as extinct when E+A+I ends below this many individuals.
/// Deliberately decoupled from the integrator's positivity clamp.
pub const EXTINCTION_THRESHOLD: f64 = 1e-3;

/// Default trailing share of the grid used by the persistence estimator.
pub const DEFAULT_TAIL_FRACTION: f64 = 0.2;

/// Errors from ensemble orchestration and the time-average operators.
#[derive(Debug, Error)]
pub enum EnsembleError {
    #[error("time average of an empty trajectory is undefined")]
    EmptyTrajectory,
    #[error("tail fraction must lie in (0, 1], got {0}")]
    InvalidTailFraction(f64),
    #[error("an ensemble needs at least one path")]
    NoPaths,
    #[error("path {path_index} under master seed {master_seed} failed: {source}")]
    PathFailed {
        path_index: u64,
        master_seed: u64,
        source: IntegrateError,
    },
}

/// A linear functional of the state, e.g. one compartment or E+A+I.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Selector([f64; 7]);

impl Selector {
    /// Reads a single compartment.
    pub fn component(c: Compartment) -> Self {
        let mut w = [0.0; 7];
        w[c.index()] = 1.0;
        Selector(w)
    }

    /// Arbitrary linear combination with canonical-order weights.
    pub fn linear(weights: [f64; 7]) -> Self {
        Selector(weights)
    }

    /// Total infected mass E + A + I, the extinction observable.
    pub fn infected_total() -> Self {
        Selector([0.0, 0.0, 1.0, 1.0, 1.0, 0.0, 0.0])
    }

    /// Infectious mass A + I, the persistence observable.
    pub fn infectious() -> Self {
        Selector([0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0])
    }

    /// Applies the functional to one state.
    pub fn apply(&self, state: &State) -> f64 {
        self.0
            .iter()
            .zip(state.as_array())
            .map(|(w, v)| w * v)
            .sum()
    }
}

/// Running averages ⟨φ⟩ on a trajectory grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeAverageSeries {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
}

impl TimeAverageSeries {
    /// The last running average, the finite-horizon stand-in for the limit.
    pub fn terminal(&self) -> f64 {
        *self.values.last().expect("series is never empty")
    }
}

/// Left-Riemann running average of a selector along a trajectory.
///
/// ⟨φ⟩(t_k) = Σ_{j<k} φ(t_j)(t_{j+1}−t_j) / (t_k − t_0); the first point is
/// defined as φ(t_0) itself. Averaging a constant reproduces it exactly at
/// every grid point, and the operator is linear in the selector.
pub fn time_average(traj: &Trajectory, selector: Selector) -> Result<TimeAverageSeries, EnsembleError> {
    if traj.is_empty() {
        return Err(EnsembleError::EmptyTrajectory);
    }
    let phi: Vec<f64> = traj.states.iter().map(|s| selector.apply(s)).collect();
    let mut values = Vec::with_capacity(phi.len());
    values.push(phi[0]);
    let t0 = traj.times[0];
    let mut integral = 0.0;
    for k in 1..phi.len() {
        integral += phi[k - 1] * (traj.times[k] - traj.times[k - 1]);
        values.push(integral / (traj.times[k] - t0));
    }
    Ok(TimeAverageSeries {
        grid: traj.times.clone(),
        values,
    })
}

/// Endpoint estimate of the exponential rate of E+A+I:
/// ln(E+A+I)(t_end)/t_end − ln(E+A+I)(0)/t_end.
///
/// Returns `None` (the "already extinct" sentinel) when the infected mass is
/// nonpositive at either end, where the logarithm has nothing to measure.
pub fn extinction_slope(traj: &Trajectory) -> Option<f64> {
    if traj.is_empty() {
        return None;
    }
    let obs = Selector::infected_total();
    let m0 = obs.apply(&traj.states[0]);
    let mt = obs.apply(traj.last_state());
    let span = traj.times[traj.times.len() - 1] - traj.times[0];
    if m0 > 0.0 && mt > 0.0 && span > 0.0 {
        Some((mt.ln() - m0.ln()) / span)
    } else {
        None
    }
}

/// Persistence proxy: the minimum of ⟨A+I⟩ over the trailing
/// `tail_fraction` of the grid.
///
/// The theoretical statement is a liminf, so only the tail of a long run is
/// informative; the leading transient is discarded.
pub fn persistence_estimate(traj: &Trajectory, tail_fraction: f64) -> Result<f64, EnsembleError> {
    if !(tail_fraction > 0.0 && tail_fraction <= 1.0) {
        return Err(EnsembleError::InvalidTailFraction(tail_fraction));
    }
    let series = time_average(traj, Selector::infectious())?;
    let n = series.values.len();
    let n_tail = ((tail_fraction * n as f64).ceil() as usize).clamp(1, n);
    Ok(series.values[n - n_tail..]
        .iter()
        .fold(f64::INFINITY, |acc, &v| acc.min(v)))
}

/// Mean and sample standard deviation of the defined per-path slopes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeStats {
    pub mean: f64,
    pub std: f64,
    /// How many paths had a defined (not-already-extinct) slope.
    pub n: usize,
}

/// Per-time, per-component summary of a seeded path family.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleSummary {
    pub n_paths: usize,
    pub grid: Vec<f64>,
    /// Pointwise mean state across paths.
    pub mean_path: Vec<State>,
    /// Pointwise 5th percentile (nearest-rank) per component.
    pub band_low: Vec<State>,
    /// Pointwise 95th percentile (nearest-rank) per component.
    pub band_high: Vec<State>,
    /// Share of paths with E+A+I below [`EXTINCTION_THRESHOLD`] at t_end.
    pub extinction_fraction: f64,
    pub slope_stats: SlopeStats,
    /// Tail minimum of ⟨A+I⟩ per path, in path-index order.
    pub persistence_stats: Vec<f64>,
    /// Step size of the underlying paths.
    pub dt: f64,
    /// Parameter fingerprint of the generating inputs.
    pub fingerprint: u64,
}

impl EnsembleSummary {
    /// The mean path wrapped as a trajectory, e.g. for time averaging.
    pub fn mean_trajectory(&self) -> Trajectory {
        Trajectory {
            times: self.grid.clone(),
            states: self.mean_path.clone(),
            meta: TrajectoryMeta {
                integrator: "ensemble-mean",
                dt: self.dt,
                seed: None,
                fingerprint: self.fingerprint,
                min_pre_clamp: f64::NAN,
            },
        }
    }
}

/// Nearest-rank percentile: the ceil(q·n)-th smallest of `sorted`.
fn nearest_rank(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    let rank = ((q * n as f64).ceil() as usize).clamp(1, n);
    sorted[rank - 1]
}

/// Integrates `n_paths` seeded paths and reduces them to an
/// [`EnsembleSummary`].
///
/// Path j uses `SeedSpec { master_seed, path_index: j }`; the full summary
/// is a deterministic function of the inputs, bit-identical across runs and
/// across any degree of parallelism. The first failing path (in index
/// order) aborts the ensemble.
pub fn run_ensemble(
    params: &ModelParameters,
    noise: &NoiseIntensities,
    init: &State,
    cfg: &IntegratorConfig,
    master_seed: u64,
    n_paths: usize,
) -> Result<EnsembleSummary, EnsembleError> {
    if n_paths == 0 {
        return Err(EnsembleError::NoPaths);
    }
    let run_path = |j: usize| {
        integrate_sde(
            params,
            noise,
            init,
            cfg,
            SeedSpec {
                master_seed,
                path_index: j as u64,
            },
        )
    };

    #[cfg(feature = "parallel")]
    let results: Vec<Result<Trajectory, IntegrateError>> =
        (0..n_paths).into_par_iter().map(run_path).collect();
    #[cfg(not(feature = "parallel"))]
    let results: Vec<Result<Trajectory, IntegrateError>> = (0..n_paths).map(run_path).collect();

    let mut paths = Vec::with_capacity(n_paths);
    for (j, result) in results.into_iter().enumerate() {
        match result {
            Ok(traj) => paths.push(traj),
            Err(source) => {
                return Err(EnsembleError::PathFailed {
                    path_index: j as u64,
                    master_seed,
                    source,
                })
            }
        }
    }

    let grid = paths[0].times.clone();
    let n_times = grid.len();
    let inv_n = 1.0 / n_paths as f64;

    let mut mean_path = Vec::with_capacity(n_times);
    let mut band_low = Vec::with_capacity(n_times);
    let mut band_high = Vec::with_capacity(n_times);
    let mut column = vec![0.0; n_paths];
    for t in 0..n_times {
        let mut mean = [0.0; 7];
        let mut low = [0.0; 7];
        let mut high = [0.0; 7];
        for comp in 0..7 {
            // Fixed path order keeps the floating-point sum reproducible.
            for (j, path) in paths.iter().enumerate() {
                column[j] = path.states[t].as_array()[comp];
            }
            mean[comp] = column.iter().sum::<f64>() * inv_n;
            column.sort_unstable_by(f64::total_cmp);
            low[comp] = nearest_rank(&column, 0.05);
            high[comp] = nearest_rank(&column, 0.95);
        }
        mean_path.push(State::from_array(mean));
        band_low.push(State::from_array(low));
        band_high.push(State::from_array(high));
    }

    let obs = Selector::infected_total();
    let extinct = paths
        .iter()
        .filter(|p| obs.apply(p.last_state()) < EXTINCTION_THRESHOLD)
        .count();

    let slopes: Vec<f64> = paths.iter().filter_map(extinction_slope).collect();
    let slope_stats = if slopes.is_empty() {
        SlopeStats {
            mean: f64::NAN,
            std: f64::NAN,
            n: 0,
        }
    } else {
        let mean = slopes.iter().sum::<f64>() / slopes.len() as f64;
        let var = if slopes.len() > 1 {
            slopes.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / (slopes.len() - 1) as f64
        } else {
            0.0
        };
        SlopeStats {
            mean,
            std: var.sqrt(),
            n: slopes.len(),
        }
    };

    let mut persistence_stats = Vec::with_capacity(n_paths);
    for path in &paths {
        persistence_stats.push(persistence_estimate(path, DEFAULT_TAIL_FRACTION)?);
    }

    Ok(EnsembleSummary {
        n_paths,
        grid,
        mean_path,
        band_low,
        band_high,
        extinction_fraction: extinct as f64 * inv_n,
        slope_stats,
        persistence_stats,
        dt: cfg.dt,
        fingerprint: params.fingerprint(),
    })
}

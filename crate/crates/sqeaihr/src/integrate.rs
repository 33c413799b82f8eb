//! Fixed-step trajectory generation for the deterministic and stochastic
//! systems.
//!
//! The deterministic path uses classical four-stage Runge-Kutta; the
//! stochastic one uses full-truncation Euler-Maruyama, which evaluates drift
//! and diffusion at the componentwise nonnegative part of the state so the
//! boundary-inflow structure of the model is preserved. Both schemes are
//! fixed-step on purpose: the recorded grid must be identical across runs,
//! machines and thread counts.
//!
//! Randomness follows a counter contract: the seven increments of step k on
//! path j under master seed s are a pure function of (s, j, k, channel).
//! See [`wiener_increments`].

use thiserror::Error;

use crate::model::{diffusion, drift, ModelParameters, NoiseIntensities, State};
use crate::rng;

/// Step size, horizon and recording policy for one integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    /// Horizon in days; rounded to the nearest whole number of steps.
    pub t_end: f64,
    /// Step size in days.
    pub dt: f64,
    /// Steps between stored samples (the final state is always stored).
    pub record_every: usize,
    /// Recorded states are clamped at this floor (default 0). Extinction
    /// detection uses its own threshold, so clamping never fakes die-out.
    pub positivity_floor: f64,
}

impl IntegratorConfig {
    /// Config with the given horizon and step, recording every step with a
    /// zero positivity floor.
    pub fn new(t_end: f64, dt: f64) -> Self {
        IntegratorConfig {
            t_end,
            dt,
            record_every: 1,
            positivity_floor: 0.0,
        }
    }

    /// Checks the invariants without running anything, so callers can
    /// reject a bad config before committing to an integration.
    pub fn validate(&self) -> Result<(), IntegrateError> {
        self.step_count().map(|_| ())
    }

    /// Validates the invariants and returns the step count.
    fn step_count(&self) -> Result<usize, IntegrateError> {
        if !self.dt.is_finite() || self.dt <= 0.0 {
            return Err(IntegrateError::Config(format!(
                "dt must be finite and > 0, got {}",
                self.dt
            )));
        }
        if !self.t_end.is_finite() || self.t_end < self.dt {
            return Err(IntegrateError::Config(format!(
                "t_end must be finite and >= dt, got t_end = {} with dt = {}",
                self.t_end, self.dt
            )));
        }
        if self.record_every == 0 {
            return Err(IntegrateError::Config(
                "record_every must be >= 1".to_string(),
            ));
        }
        if !self.positivity_floor.is_finite() || self.positivity_floor < 0.0 {
            return Err(IntegrateError::Config(format!(
                "positivity_floor must be finite and >= 0, got {}",
                self.positivity_floor
            )));
        }
        Ok((self.t_end / self.dt).round().max(1.0) as usize)
    }
}

/// Identity of one stochastic path: equal pairs reproduce bit-identical
/// increment streams, distinct pairs give statistically independent ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedSpec {
    pub master_seed: u64,
    pub path_index: u64,
}

/// Provenance of a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryMeta {
    /// Scheme name: "rk4", "euler-maruyama" or "ensemble-mean".
    pub integrator: &'static str,
    pub dt: f64,
    /// Absent for deterministic runs.
    pub seed: Option<SeedSpec>,
    /// [`ModelParameters::fingerprint`] of the generating parameters.
    pub fingerprint: u64,
    /// Smallest raw component seen across all steps, before any clamping;
    /// quantifies how far the scheme undershot the positive cone.
    pub min_pre_clamp: f64,
}

/// A recorded solution: strictly increasing times, one state per time.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<State>,
    pub meta: TrajectoryMeta,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// The final recorded state.
    pub fn last_state(&self) -> &State {
        self.states.last().expect("trajectories are never empty")
    }
}

/// Integration failures.
#[derive(Debug, Error)]
pub enum IntegrateError {
    #[error("invalid integrator config: {0}")]
    Config(String),
    #[error("initial state must be componentwise nonnegative")]
    NegativeInit,
    /// The state left the finite range; `seed` is present for stochastic
    /// runs so the failing path can be replayed.
    #[error("non-finite state at step {step} (t = {time} days)")]
    NonFinite {
        step: usize,
        time: f64,
        seed: Option<SeedSpec>,
    },
}

/// The seven Normal(0, dt) Wiener increments of one step.
///
/// A pure function of (seed, step_index, channel): channel k of step n on a
/// path is always the same value, independent of execution order or thread
/// count. Channels are mutually independent streams.
pub fn wiener_increments(seed: &SeedSpec, step_index: u64, dt: f64) -> [f64; 7] {
    debug_assert!(dt > 0.0);
    let sqrt_dt = dt.sqrt();
    let mut db = [0.0; 7];
    for (channel, slot) in db.iter_mut().enumerate() {
        *slot = sqrt_dt
            * rng::standard_normal(seed.master_seed, seed.path_index, step_index, channel as u64);
    }
    db
}

fn check_init(init: &State) -> Result<(), IntegrateError> {
    if init.is_nonnegative() {
        Ok(())
    } else {
        Err(IntegrateError::NegativeInit)
    }
}

struct Recorder {
    times: Vec<f64>,
    states: Vec<State>,
    every: usize,
    n_steps: usize,
    dt: f64,
    floor: f64,
    min_pre_clamp: f64,
}

impl Recorder {
    fn new(cfg: &IntegratorConfig, n_steps: usize) -> Self {
        let capacity = n_steps / cfg.record_every + 2;
        Recorder {
            times: Vec::with_capacity(capacity),
            states: Vec::with_capacity(capacity),
            every: cfg.record_every,
            n_steps,
            dt: cfg.dt,
            floor: cfg.positivity_floor,
            min_pre_clamp: f64::INFINITY,
        }
    }

    fn observe(&mut self, step: usize, x: &[f64; 7]) {
        for &v in x {
            self.min_pre_clamp = self.min_pre_clamp.min(v);
        }
        if step % self.every == 0 || step == self.n_steps {
            self.times.push(step as f64 * self.dt);
            self.states.push(State::from_array(*x).clamped(self.floor));
        }
    }

    fn finish(self, integrator: &'static str, params: &ModelParameters, seed: Option<SeedSpec>) -> Trajectory {
        Trajectory {
            times: self.times,
            states: self.states,
            meta: TrajectoryMeta {
                integrator,
                dt: self.dt,
                seed,
                fingerprint: params.fingerprint(),
                min_pre_clamp: self.min_pre_clamp,
            },
        }
    }
}

fn all_finite(x: &[f64; 7]) -> bool {
    x.iter().all(|v| v.is_finite())
}

/// Classical RK4 solution of the deterministic system.
///
/// Long horizons drive the total population into the attracting band
/// [Λ/(μ+dA+dI+dH), Λ/μ]; see the region predicates in the model module.
pub fn integrate_ode(
    params: &ModelParameters,
    init: &State,
    cfg: &IntegratorConfig,
) -> Result<Trajectory, IntegrateError> {
    let n_steps = cfg.step_count()?;
    check_init(init)?;
    let dt = cfg.dt;
    let mut rec = Recorder::new(cfg, n_steps);
    let mut x = init.as_array();
    rec.observe(0, &x);

    for step in 1..=n_steps {
        let k1 = drift(params, &State::from_array(x));
        let mut stage = x;
        for k in 0..7 {
            stage[k] = x[k] + 0.5 * dt * k1[k];
        }
        let k2 = drift(params, &State::from_array(stage));
        for k in 0..7 {
            stage[k] = x[k] + 0.5 * dt * k2[k];
        }
        let k3 = drift(params, &State::from_array(stage));
        for k in 0..7 {
            stage[k] = x[k] + dt * k3[k];
        }
        let k4 = drift(params, &State::from_array(stage));
        for k in 0..7 {
            x[k] += dt / 6.0 * (k1[k] + 2.0 * k2[k] + 2.0 * k3[k] + k4[k]);
        }
        if !all_finite(&x) {
            return Err(IntegrateError::NonFinite {
                step,
                time: step as f64 * dt,
                seed: None,
            });
        }
        rec.observe(step, &x);
    }
    Ok(rec.finish("rk4", params, None))
}

/// Full-truncation Euler-Maruyama solution of the stochastic system.
///
/// Each step evaluates drift and diffusion at max(x, 0) componentwise and
/// advances x itself: `x <- x + F(x⁺)·dt + G(x⁺)·ΔB` with seven independent
/// Normal(0, dt) increments. Identical [`SeedSpec`]s reproduce the
/// trajectory bit-exactly.
pub fn integrate_sde(
    params: &ModelParameters,
    noise: &NoiseIntensities,
    init: &State,
    cfg: &IntegratorConfig,
    seed: SeedSpec,
) -> Result<Trajectory, IntegrateError> {
    let n_steps = cfg.step_count()?;
    check_init(init)?;
    let dt = cfg.dt;
    let mut rec = Recorder::new(cfg, n_steps);
    let mut x = init.as_array();
    rec.observe(0, &x);

    for step in 1..=n_steps {
        let mut plus = x;
        for v in &mut plus {
            *v = v.max(0.0);
        }
        let truncated = State::from_array(plus);
        let f = drift(params, &truncated);
        let g = diffusion(noise, &truncated);
        let db = wiener_increments(&seed, (step - 1) as u64, dt);
        for k in 0..7 {
            x[k] += f[k] * dt + g[k] * db[k];
        }
        if !all_finite(&x) {
            return Err(IntegrateError::NonFinite {
                step,
                time: step as f64 * dt,
                seed: Some(seed),
            });
        }
        rec.observe(step, &x);
    }
    Ok(rec.finish("euler-maruyama", params, Some(seed)))
}

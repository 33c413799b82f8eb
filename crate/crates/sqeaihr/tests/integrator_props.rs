//! Integration-scheme checks: equilibrium preservation, analytic decay,
//! convergence order against an adaptive reference, the randomness
//! contract, and the invariant-region behaviour of long trajectories.

mod support;

use sqeaihr::analysis::{compute_dfe, endemic_equilibrium, DfeConvention};
use sqeaihr::integrate::{
    integrate_ode, integrate_sde, wiener_increments, IntegratorConfig, SeedSpec,
};
use sqeaihr::model::{drift, ModelParameters, NoiseIntensities, ParameterSet, State};
use sqeaihr::scenario::{figure_scenario, FigureId, DEFAULT_INITIAL_STATE};
use support::{reference_terminal_state, TestRng};

fn figure_config(id: FigureId) -> sqeaihr::scenario::ScenarioConfig {
    figure_scenario(id).runs[0].1.clone()
}

fn infected_total(state: &State) -> f64 {
    state.e + state.a + state.i
}

fn max_rel_gap(a: &State, b: &State) -> f64 {
    let (xa, xb) = (a.as_array(), b.as_array());
    (0..7).fold(0.0f64, |m, k| {
        m.max((xa[k] - xb[k]).abs() / (1.0 + xb[k].abs()))
    })
}

#[test]
fn disease_free_start_stays_put_for_a_thousand_days() {
    let params = ModelParameters::table();
    let dfe = compute_dfe(&params);
    let mut cfg = IntegratorConfig::new(1000.0, 0.01);
    cfg.record_every = 1000;
    let traj = integrate_ode(&params, &dfe.full_state, &cfg).unwrap();
    let tol = 1e-9 * dfe.s_o;
    for state in &traj.states {
        for k in 0..7 {
            let drifted = (state.as_array()[k] - dfe.full_state.as_array()[k]).abs();
            assert!(drifted <= tol, "component {k} moved {drifted} off the equilibrium");
        }
    }
}

#[test]
fn decoupled_compartments_decay_at_the_mortality_rate() {
    let params = ParameterSet {
        lambda_in: 0.0,
        beta1: 0.0,
        beta2: 0.0,
        b: 70.0,
        theta: 0.5,
        q: 0.0,
        lam: 0.0,
        mu: 0.1,
        sigma: 0.0,
        p: 0.5,
        eps_a: 0.0,
        gamma_a: 0.0,
        d_a: 0.0,
        eps_i: 0.0,
        gamma_i: 0.0,
        d_i: 0.0,
        gamma_h: 0.0,
        d_h: 0.0,
    }
    .validate()
    .unwrap();
    let init = State::new(100.0, 80.0, 60.0, 40.0, 30.0, 20.0, 10.0);
    let mut cfg = IntegratorConfig::new(10.0, 0.01);
    cfg.record_every = 1000;
    let traj = integrate_ode(&params, &init, &cfg).unwrap();
    let factor = (-params.mu() * 10.0).exp();
    for k in 0..7 {
        let expected = init.as_array()[k] * factor;
        let got = traj.last_state().as_array()[k];
        assert!(
            (got - expected).abs() <= 1e-8 * expected,
            "component {k}: {got} vs analytic {expected}"
        );
    }
}

/// The low-transmission scenario: the outbreak collapses by orders of
/// magnitude within the 350-day window (the wave peaks near day 49 and the
/// infected pool then decays monotonically), and the fixed-step solution
/// tracks the adaptive reference. The long-run attractor, however, is the
/// endemic state of the formula convention, approached on the slow 1/μ
/// demographic timescale; the window shows the wave, not the limit.
#[test]
fn low_transmission_wave_collapses_within_the_window() {
    let config = figure_config(FigureId::Fig1);
    let mut cfg = config.integrator;
    assert_eq!(cfg.t_end, 350.0);
    cfg.record_every = 10;
    let traj = integrate_ode(&config.params, &config.init, &cfg).unwrap();

    let peak = traj.states.iter().map(infected_total).fold(0.0f64, f64::max);
    let terminal = infected_total(traj.last_state());
    assert!(
        terminal < 5e-3 * peak,
        "terminal infected pool {terminal} is not far below the peak {peak}"
    );
    let tail: Vec<f64> = traj
        .times
        .iter()
        .zip(&traj.states)
        .filter(|(t, _)| **t >= 250.0)
        .map(|(_, s)| infected_total(s))
        .collect();
    for w in tail.windows(2) {
        assert!(w[1] <= w[0] * (1.0 + 1e-9), "infected pool rebounded inside the window");
    }

    let reference = reference_terminal_state(&config.params, &config.init, 350.0, 1e-10);
    let gap = max_rel_gap(traj.last_state(), &reference);
    assert!(gap <= 1e-6, "fixed-step terminal state off the reference by {gap}");

    // True long-run behaviour: the formula-convention endemic state.
    let star = endemic_equilibrium(&config.params, DfeConvention::Formula)
        .expect("formula-convention R0 exceeds one here");
    let far = reference_terminal_state(&config.params, &config.init, 5000.0, 1e-10);
    assert!(
        (far.i - star.i).abs() <= 0.05 * star.i,
        "I(5000) = {} should sit within 5% of the endemic I* = {}",
        far.i,
        star.i
    );
}

/// The higher-transmission scenario settles on the endemic level: the wave
/// passes within the figure window and the symptomatic count approaches the
/// computed I* on the demographic timescale.
#[test]
fn higher_transmission_settles_on_the_endemic_level() {
    let config = figure_config(FigureId::Fig2);
    let mut cfg = config.integrator;
    cfg.record_every = 10;
    let traj = integrate_ode(&config.params, &config.init, &cfg).unwrap();
    let peak = traj.states.iter().map(infected_total).fold(0.0f64, f64::max);
    let terminal = infected_total(traj.last_state());
    assert!(terminal > 1.0, "infection should persist past the window, got {terminal}");
    assert!(terminal < 5e-3 * peak, "the wave itself must have passed by day 350");

    let star = endemic_equilibrium(&config.params, DfeConvention::Formula).unwrap();
    let far = reference_terminal_state(&config.params, &config.init, 5000.0, 1e-10);
    assert!(
        (far.i - star.i).abs() <= 0.10 * star.i,
        "I(5000) = {} should sit within 10% of the endemic I* = {}",
        far.i,
        star.i
    );
}

#[test]
fn trajectories_record_clean_grids() {
    let config = figure_config(FigureId::Fig3);
    let mut cfg = config.integrator;
    cfg.record_every = 7;
    let seed = SeedSpec { master_seed: 9, path_index: 4 };
    let noise = config.noise.unwrap();
    let traj = integrate_sde(&config.params, &noise, &config.init, &cfg, seed).unwrap();
    assert_eq!(traj.times.len(), traj.states.len());
    for w in traj.times.windows(2) {
        assert!(w[1] > w[0], "times must increase strictly");
    }
    assert!(traj.states.iter().all(State::is_nonnegative));
    assert_eq!(traj.meta.integrator, "euler-maruyama");
    assert_eq!(traj.meta.fingerprint, config.params.fingerprint());
}

#[test]
fn zero_noise_euler_maruyama_is_forward_euler() {
    let config = figure_config(FigureId::Fig2);
    let dt = 1e-3;
    let n_steps = 5000;
    let mut cfg = IntegratorConfig::new(dt * n_steps as f64, dt);
    cfg.record_every = n_steps;
    let seed = SeedSpec { master_seed: 123, path_index: 0 };
    let em = integrate_sde(
        &config.params,
        &NoiseIntensities::zero(),
        &config.init,
        &cfg,
        seed,
    )
    .unwrap();

    // Hand-rolled forward Euler with the same truncation rule.
    let mut y = config.init;
    for _ in 0..n_steps {
        let f = drift(&config.params, &y.clamped(0.0));
        let x = y.as_array();
        y = State::from_array(std::array::from_fn(|k| x[k] + f[k] * dt));
    }
    assert_eq!(
        em.last_state().as_array(),
        y.as_array(),
        "zero-noise EM must coincide with explicit Euler bit for bit"
    );

    // And explicit Euler is an O(dt) approximation of the RK4 solution.
    let mut long = IntegratorConfig::new(50.0, dt);
    long.record_every = 50_000;
    let em50 = integrate_sde(
        &config.params,
        &NoiseIntensities::zero(),
        &config.init,
        &long,
        seed,
    )
    .unwrap();
    let ode50 = integrate_ode(&config.params, &config.init, &long).unwrap();
    let (n_em, n_ode) = (
        em50.last_state().total_population(),
        ode50.last_state().total_population(),
    );
    assert!(
        (n_em - n_ode).abs() <= 5e-2 * n_ode,
        "zero-noise EM population {n_em} strays from the ODE population {n_ode}"
    );
}

#[test]
fn identical_seeds_reproduce_paths_and_distinct_paths_differ() {
    let config = figure_config(FigureId::Fig3);
    let noise = config.noise.unwrap();
    let mut cfg = IntegratorConfig::new(50.0, 0.01);
    cfg.record_every = 100;
    let seed = SeedSpec { master_seed: 42, path_index: 3 };
    let a = integrate_sde(&config.params, &noise, &config.init, &cfg, seed).unwrap();
    let b = integrate_sde(&config.params, &noise, &config.init, &cfg, seed).unwrap();
    assert_eq!(a, b, "same seed must reproduce the trajectory exactly");

    let other = SeedSpec { master_seed: 42, path_index: 4 };
    let c = integrate_sde(&config.params, &noise, &config.init, &cfg, other).unwrap();
    assert_ne!(a.states, c.states, "distinct path indices must decorrelate");
}

/// Extinction scenario: nearly every path dies out within the window, and
/// no path ever blows past the crude boundedness envelope.
#[test]
fn extinction_paths_die_out_and_stay_bounded() {
    let config = figure_config(FigureId::Fig3);
    let noise = config.noise.unwrap();
    let mut cfg = config.integrator;
    cfg.record_every = 10;
    assert_eq!(cfg.t_end, 200.0);
    let n0 = config.init.total_population();
    let envelope = 10.0 * (n0 + config.params.lambda_in() / config.params.mu());

    let mut extinct = 0;
    for path in 0..100 {
        let seed = SeedSpec { master_seed: 42, path_index: path };
        let traj = integrate_sde(&config.params, &noise, &config.init, &cfg, seed).unwrap();
        if infected_total(traj.last_state()) < 1e-3 {
            extinct += 1;
        }
        let max_n = traj
            .states
            .iter()
            .map(State::total_population)
            .fold(0.0f64, f64::max);
        assert!(max_n <= envelope, "path {path} reached N = {max_n} > {envelope}");
    }
    assert!(extinct >= 95, "only {extinct}/100 paths went extinct by day 200");
}

#[test]
fn rk4_error_contracts_by_at_least_twelve_per_halving() {
    let config = figure_config(FigureId::Fig2);
    let reference = reference_terminal_state(&config.params, &config.init, 50.0, 1e-12);
    let error_at = |dt: f64| {
        let mut cfg = IntegratorConfig::new(50.0, dt);
        cfg.record_every = (50.0 / dt).round() as usize;
        let traj = integrate_ode(&config.params, &config.init, &cfg).unwrap();
        max_rel_gap(traj.last_state(), &reference)
    };
    // Steps chosen so the coarser error sits far above the reference
    // solution's own error floor; otherwise the ratio saturates.
    let coarse = error_at(0.1);
    let fine = error_at(0.05);
    assert!(
        coarse >= 12.0 * fine,
        "halving dt only reduced the error from {coarse} to {fine}"
    );
}

/// Strong convergence on a degenerate scalar case: with Λ = 0, no coupling
/// and only S-channel noise, S is a geometric Brownian motion with the
/// closed form S0·exp((−μ − σ²/2)t + σB_t), where B_t is the sum of the
/// generator's own increments. Halving dt should shrink the strong error by
/// about √2.
#[test]
fn euler_maruyama_strong_error_contracts_like_sqrt_dt() {
    let params = ParameterSet {
        lambda_in: 0.0,
        beta1: 0.0,
        beta2: 0.0,
        b: 70.0,
        theta: 0.5,
        q: 0.0,
        lam: 0.0,
        mu: 0.05,
        sigma: 0.0,
        p: 0.5,
        eps_a: 0.0,
        gamma_a: 0.0,
        d_a: 0.0,
        eps_i: 0.0,
        gamma_i: 0.0,
        d_i: 0.0,
        gamma_h: 0.0,
        d_h: 0.0,
    }
    .validate()
    .unwrap();
    let noise = NoiseIntensities::new([0.2, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
    let s0 = 100.0;
    let init = State::new(s0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    let t_end = 1.0;
    let n_paths = 800;

    let strong_error = |dt: f64| {
        let n_steps = (t_end / dt).round() as u64;
        let mut cfg = IntegratorConfig::new(t_end, dt);
        cfg.record_every = n_steps as usize;
        let mut total = 0.0;
        for path in 0..n_paths {
            let seed = SeedSpec { master_seed: 4242, path_index: path };
            let traj = integrate_sde(&params, &noise, &init, &cfg, seed).unwrap();
            let b_t: f64 = (0..n_steps)
                .map(|j| wiener_increments(&seed, j, dt)[0])
                .sum();
            let exact = s0 * ((-params.mu() - 0.02) * t_end + 0.2 * b_t).exp();
            total += (traj.last_state().s - exact).abs();
        }
        total / n_paths as f64
    };
    let coarse = strong_error(0.01);
    let fine = strong_error(0.005);
    assert!(
        coarse >= 1.3 * fine,
        "strong error only fell from {coarse} to {fine} on halving"
    );
}

#[test]
fn wiener_channels_have_the_contracted_moments() {
    let seed = SeedSpec { master_seed: 2024, path_index: 0 };
    let dt = 0.01;
    let draws = 1_000_000u64;
    let mut sums = [0.0f64; 7];
    let mut sq_sums = [0.0f64; 7];
    let mut cross = 0.0f64;
    for step in 0..draws {
        let w = wiener_increments(&seed, step, dt);
        for k in 0..7 {
            sums[k] += w[k];
            sq_sums[k] += w[k] * w[k];
        }
        cross += w[0] * w[1];
    }
    let n = draws as f64;
    let mean_bound = 4.0 * (dt / n).sqrt();
    for k in 0..7 {
        let mean = sums[k] / n;
        let var = sq_sums[k] / n - mean * mean;
        assert!(mean.abs() <= mean_bound, "channel {k} mean {mean} exceeds {mean_bound}");
        assert!(
            (var - dt).abs() <= 1e-4,
            "channel {k} variance {var} strays from dt = {dt}"
        );
    }
    let corr = (cross / n - (sums[0] / n) * (sums[1] / n)) / dt;
    assert!(corr.abs() <= 0.004, "channels 0 and 1 correlate at {corr}");

    // Same counter, same value: the generator is a pure function.
    assert_eq!(wiener_increments(&seed, 77, dt), wiener_increments(&seed, 77, dt));
}

/// Long-horizon absorption: from scattered positive starts the population
/// count drops into the band [Λ/(μ+dA+dI+dH) − η′, Λ/μ + η] and never
/// leaves it again; positivity holds to the stated slack throughout.
#[test]
fn population_band_absorbs_random_starts() {
    let params = ModelParameters::table();
    let carrying = params.lambda_in() / params.mu();
    let lower =
        params.lambda_in() / (params.mu() + params.d_a() + params.d_i() + params.d_h());
    let eta = 1e-6 * carrying;

    let mut rng = TestRng::new(0xba4d_0001);
    for trial in 0..6 {
        let init = State::from_array(std::array::from_fn(|_| rng.log_uniform(1.0, 1e5)));
        let n0 = init.total_population();
        let mut cfg = IntegratorConfig::new(5000.0, 2e-3);
        cfg.record_every = 500;
        let traj = integrate_ode(&params, &init, &cfg).unwrap();
        assert!(
            traj.meta.min_pre_clamp >= -1e-9 * n0,
            "trial {trial}: positivity undershoot {}",
            traj.meta.min_pre_clamp
        );
        let inside = |n: f64| n <= carrying + eta && n >= lower - eta;
        let entry = traj
            .states
            .iter()
            .position(|s| inside(s.total_population()))
            .unwrap_or_else(|| panic!("trial {trial}: never entered the band"));
        for (k, state) in traj.states.iter().enumerate().skip(entry) {
            let n = state.total_population();
            assert!(inside(n), "trial {trial}: left the band at index {k} with N = {n}");
        }
    }
}

/// Starts inside the script-S region (S ≤ S°, Q ≤ Q° on top of the band)
/// stay there: susceptible and quarantined counts never top their
/// disease-free levels.
#[test]
fn script_s_region_is_forward_invariant() {
    let params = ModelParameters::table();
    let dfe = compute_dfe(&params);
    let mut rng = TestRng::new(0x5c12_975);
    for trial in 0..4 {
        let init = State::new(
            rng.uniform(0.1, 0.9) * dfe.s_o,
            rng.uniform(0.1, 0.9) * dfe.q_o,
            rng.uniform(0.0, 50.0),
            rng.uniform(0.0, 50.0),
            rng.uniform(0.0, 50.0),
            rng.uniform(0.0, 50.0),
            rng.uniform(0.0, 50.0),
        );
        let mut cfg = IntegratorConfig::new(2000.0, 2e-3);
        cfg.record_every = 500;
        let traj = integrate_ode(&params, &init, &cfg).unwrap();
        for state in &traj.states {
            assert!(
                state.s <= dfe.s_o * (1.0 + 1e-9),
                "trial {trial}: S = {} exceeded S° = {}",
                state.s,
                dfe.s_o
            );
            assert!(
                state.q_c <= dfe.q_o * (1.0 + 1e-9),
                "trial {trial}: Q = {} exceeded Q° = {}",
                state.q_c,
                dfe.q_o
            );
        }
    }
}

/// The default initial state formatted by the scenarios is the one every
/// figure uses; pin it here so a drive-by edit cannot silently retarget the
/// whole replication suite.
#[test]
fn default_initial_state_matches_the_figures() {
    assert_eq!(
        DEFAULT_INITIAL_STATE.as_array(),
        [1.8e6, 0.0, 10.0, 15.0, 8.0, 5.0, 0.0]
    );
}

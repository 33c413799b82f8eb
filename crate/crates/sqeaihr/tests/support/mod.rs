//! Shared oracles for the integration tests.
//!
//! Everything here deliberately avoids the crate's production numerics: the
//! reference integrator is an embedded adaptive Cash-Karp 4(5) pair instead
//! of fixed-step RK4, equilibria are re-derived with a damped Newton
//! iteration on the raw vector field instead of the closed-form quadratic,
//! and Jacobians come from central differences instead of the analytic
//! matrix. Agreement between the two routes is then evidence, not tautology.
#![allow(dead_code)]

use nalgebra::{SMatrix, SVector};
use sqeaihr::analysis::{compute_dfe, compute_r0};
use sqeaihr::model::{drift, ModelParameters, ParameterSet, State};

pub type Vec7 = SVector<f64, 7>;
pub type Mat7 = SMatrix<f64, 7, 7>;

fn deriv(params: &ModelParameters, y: &[f64; 7]) -> [f64; 7] {
    drift(params, &State::from_array(*y))
}

fn comb(y: &[f64; 7], h: f64, terms: &[(f64, &[f64; 7])]) -> [f64; 7] {
    let mut out = *y;
    for (c, k) in terms {
        for i in 0..7 {
            out[i] += h * c * k[i];
        }
    }
    out
}

/// One Cash-Karp step: returns the 5th-order solution and the embedded
/// 4th/5th-order error estimate.
fn cash_karp_step(params: &ModelParameters, y: &[f64; 7], h: f64) -> ([f64; 7], [f64; 7]) {
    let k1 = deriv(params, y);
    let k2 = deriv(params, &comb(y, h, &[(1.0 / 5.0, &k1)]));
    let k3 = deriv(params, &comb(y, h, &[(3.0 / 40.0, &k1), (9.0 / 40.0, &k2)]));
    let k4 = deriv(
        params,
        &comb(y, h, &[(3.0 / 10.0, &k1), (-9.0 / 10.0, &k2), (6.0 / 5.0, &k3)]),
    );
    let k5 = deriv(
        params,
        &comb(
            y,
            h,
            &[
                (-11.0 / 54.0, &k1),
                (5.0 / 2.0, &k2),
                (-70.0 / 27.0, &k3),
                (35.0 / 27.0, &k4),
            ],
        ),
    );
    let k6 = deriv(
        params,
        &comb(
            y,
            h,
            &[
                (1631.0 / 55296.0, &k1),
                (175.0 / 512.0, &k2),
                (575.0 / 13824.0, &k3),
                (44275.0 / 110592.0, &k4),
                (253.0 / 4096.0, &k5),
            ],
        ),
    );
    let y5 = comb(
        y,
        h,
        &[
            (37.0 / 378.0, &k1),
            (250.0 / 621.0, &k3),
            (125.0 / 594.0, &k4),
            (512.0 / 1771.0, &k6),
        ],
    );
    let y4 = comb(
        y,
        h,
        &[
            (2825.0 / 27648.0, &k1),
            (18575.0 / 48384.0, &k3),
            (13525.0 / 55296.0, &k4),
            (277.0 / 14336.0, &k5),
            (1.0 / 4.0, &k6),
        ],
    );
    let mut err = [0.0; 7];
    for i in 0..7 {
        err[i] = y5[i] - y4[i];
    }
    (y5, err)
}

/// Deterministic terminal state at `t_end` from an adaptive Cash-Karp 4(5)
/// integration with mixed absolute/relative error control at `tol` per
/// component per step.
pub fn reference_terminal_state(
    params: &ModelParameters,
    init: &State,
    t_end: f64,
    tol: f64,
) -> State {
    let mut t = 0.0_f64;
    let mut y = init.as_array();
    let mut h = (t_end / 100.0).clamp(1e-6, 1.0);
    while t_end - t > 1e-12 * t_end.max(1.0) {
        h = h.min(t_end - t);
        let (y5, err) = cash_karp_step(params, &y, h);
        let mut ratio: f64 = 0.0;
        for i in 0..7 {
            let scale = tol * (1.0 + y[i].abs());
            ratio = ratio.max(err[i].abs() / scale);
        }
        if ratio <= 1.0 {
            t += h;
            y = y5;
            let grow = if ratio > 0.0 { 0.9 * ratio.powf(-0.2) } else { 5.0 };
            h *= grow.min(5.0);
        } else {
            h *= (0.9 * ratio.powf(-0.25)).max(0.1);
        }
        assert!(h > 1e-13, "reference integrator step size collapsed at t = {t}");
    }
    State::from_array(y)
}

/// Step size for a central difference in column `j` at `x`.
///
/// Cube-root-of-epsilon scaling, floored at a fraction of the largest
/// component: the drift couples compartments, so the difference in any
/// column must beat roundoff noise proportional to the system scale, not
/// to the (possibly tiny) coordinate being perturbed.
pub fn fd_step(x: &[f64; 7], j: usize) -> f64 {
    let span = x.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
    6e-6 * x[j].abs().max(0.01 * span).max(1.0)
}

/// One central-difference column of the drift Jacobian.
pub fn fd_column(params: &ModelParameters, x: &[f64; 7], j: usize, h: f64) -> [f64; 7] {
    let mut plus = *x;
    let mut minus = *x;
    plus[j] += h;
    minus[j] -= h;
    let fp = deriv(params, &plus);
    let fm = deriv(params, &minus);
    std::array::from_fn(|i| (fp[i] - fm[i]) / (2.0 * h))
}

/// Term-magnitude bound for one drift evaluation near `state`: inflow plus
/// maximal incidence plus every per-capita rate applied to the whole
/// population. Roundoff in a computed drift component is a few ulps of
/// this, never of the (possibly cancelled) component value itself.
pub fn drift_gross(params: &ModelParameters, state: &State) -> f64 {
    let t = params.raw();
    let x = state.as_array();
    let n: f64 = x.iter().map(|v| v.abs()).sum();
    let incidence = t.beta1 * x[0].abs() * (x[4].abs() + t.theta * x[3].abs());
    let rates = t.q
        + t.lam
        + t.sigma
        + t.eps_a
        + t.gamma_a
        + t.d_a
        + t.eps_i
        + t.gamma_i
        + t.d_i
        + t.gamma_h
        + t.d_h
        + 7.0 * t.mu;
    t.lambda_in + incidence + rates * n
}

/// Central-difference Jacobian of the drift at `state`.
pub fn fd_jacobian(params: &ModelParameters, state: &State) -> Mat7 {
    let x = state.as_array();
    let mut jac = Mat7::zeros();
    for j in 0..7 {
        let col = fd_column(params, &x, j, fd_step(&x, j));
        for i in 0..7 {
            jac[(i, j)] = col[i];
        }
    }
    jac
}

/// Damped Newton iteration on the drift field, finite-difference Jacobian.
///
/// Returns the root if the sup-norm residual drops below `tol` within
/// `max_iter` iterations, `None` on stagnation or a singular Jacobian.
pub fn newton_drift_root(
    params: &ModelParameters,
    start: &State,
    tol: f64,
    max_iter: usize,
) -> Option<State> {
    let mut x = Vec7::from_column_slice(&start.as_array());
    for _ in 0..max_iter {
        let state = State::from_array(vec7_to_array(&x));
        let fx = Vec7::from_column_slice(&drift(params, &state));
        if fx.amax() <= tol {
            return Some(state);
        }
        let jac = fd_jacobian(params, &state);
        let step = jac.lu().solve(&(-fx))?;
        let mut lambda = 1.0_f64;
        let mut moved = false;
        for _ in 0..40 {
            let cand = x + lambda * step;
            let cand_state = State::from_array(vec7_to_array(&cand));
            let res = Vec7::from_column_slice(&drift(params, &cand_state));
            if res.amax() < fx.amax() {
                x = cand;
                moved = true;
                break;
            }
            lambda *= 0.5;
        }
        if !moved {
            return None;
        }
    }
    let state = State::from_array(vec7_to_array(&x));
    let fx = Vec7::from_column_slice(&drift(params, &state));
    (fx.amax() <= tol).then_some(state)
}

fn vec7_to_array(v: &Vec7) -> [f64; 7] {
    let mut out = [0.0; 7];
    out.copy_from_slice(v.as_slice());
    out
}

/// Tiny deterministic generator for randomized property sweeps; splitmix64
/// core, so sequences are reproducible from a literal seed.
pub struct TestRng(u64);

impl TestRng {
    pub fn new(seed: u64) -> Self {
        TestRng(seed)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1).
    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.unit()
    }

    pub fn log_uniform(&mut self, lo: f64, hi: f64) -> f64 {
        (self.uniform(lo.ln(), hi.ln())).exp()
    }
}

/// A random valid parameter set with its formula-convention R0 pinned to
/// `r0_target` by back-solving beta1 (R0 is linear in beta1 and the
/// disease-free state does not depend on it). The other rates are drawn
/// from wide but non-degenerate ranges.
pub fn random_params(rng: &mut TestRng, r0_target: f64) -> ModelParameters {
    let mut set = ParameterSet {
        lambda_in: rng.uniform(5.0, 500.0),
        beta1: 1.0,
        beta2: 0.0,
        b: rng.uniform(5.0, 200.0),
        theta: rng.uniform(0.02, 0.95),
        q: rng.uniform(0.0, 0.5),
        lam: rng.uniform(0.0, 0.5),
        mu: rng.log_uniform(1e-4, 0.05),
        sigma: rng.uniform(0.05, 0.5),
        p: rng.uniform(0.05, 0.95),
        eps_a: rng.uniform(0.01, 0.4),
        gamma_a: rng.uniform(0.01, 0.4),
        d_a: rng.uniform(0.0, 0.05),
        eps_i: rng.uniform(0.01, 0.4),
        gamma_i: rng.uniform(0.01, 0.4),
        d_i: rng.uniform(0.0, 0.05),
        gamma_h: rng.uniform(0.01, 0.4),
        d_h: rng.uniform(0.0, 0.05),
    };
    let unit = set.validate().expect("sampled ranges are valid");
    let r0_unit = compute_r0(&unit, compute_dfe(&unit).s_o);
    set.beta1 = r0_target / r0_unit;
    set.beta2 = rng.uniform(0.0, 1.0) * set.beta1;
    set.validate().expect("rescaled beta stays valid")
}

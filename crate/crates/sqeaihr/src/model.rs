//! Core data types and the right-hand sides of the SQEAIHR system.
//!
//! Compartments are always ordered (S, Q, E, A, I, H, R); every array,
//! matrix and CSV column in the crate indexes in that order. All rates are
//! per day and all population quantities are individual counts; there is no
//! unit conversion layer.

use thiserror::Error;

/// Errors raised by parameter validation and model-level domain checks.
#[derive(Debug, Error)]
pub enum ModelError {
    /// A parameter value violates a construction invariant.
    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter {
        name: &'static str,
        reason: String,
    },
    /// A quantity that must be nonnegative was negative.
    #[error("negative value {value} for {what}")]
    NegativeInput { what: &'static str, value: f64 },
}

/// The seven compartments in canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Compartment {
    S,
    Q,
    E,
    A,
    I,
    H,
    R,
}

impl Compartment {
    /// All compartments, in the canonical order used everywhere.
    pub const ALL: [Compartment; 7] = [
        Compartment::S,
        Compartment::Q,
        Compartment::E,
        Compartment::A,
        Compartment::I,
        Compartment::H,
        Compartment::R,
    ];

    /// Index of this compartment in the canonical order.
    pub fn index(self) -> usize {
        match self {
            Compartment::S => 0,
            Compartment::Q => 1,
            Compartment::E => 2,
            Compartment::A => 3,
            Compartment::I => 4,
            Compartment::H => 5,
            Compartment::R => 6,
        }
    }

    /// Column label used in CSV output.
    pub fn label(self) -> &'static str {
        match self {
            Compartment::S => "S",
            Compartment::Q => "Q",
            Compartment::E => "E",
            Compartment::A => "A",
            Compartment::I => "I",
            Compartment::H => "H",
            Compartment::R => "R",
        }
    }
}

/// Unvalidated model parameters with the reference table as default.
///
/// Field meanings (all rates per day):
///
/// - `lambda_in`: recruitment into S (individuals per day)
/// - `beta1`: baseline contact rate (per individual per day)
/// - `beta2`: maximal media-induced contact-rate reduction (same units)
/// - `b`: media half-saturation constant (individuals)
/// - `theta`: infectiousness of A relative to I (dimensionless)
/// - `q`: quarantine rate of susceptibles
/// - `lam`: release rate from Q back to S
/// - `mu`: natural death rate
/// - `sigma`: exposed-to-infective transition rate
/// - `p`: probability that a leaving exposed becomes symptomatic
/// - `eps_a`, `gamma_a`, `d_a`: hospitalization / recovery / disease death
///   rates of A
/// - `eps_i`, `gamma_i`, `d_i`: the same for I
/// - `gamma_h`, `d_h`: recovery / disease death rates of H
///
/// Call [`ParameterSet::validate`] to obtain a [`ModelParameters`] usable by
/// the rest of the crate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParameterSet {
    pub lambda_in: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub b: f64,
    pub theta: f64,
    pub q: f64,
    pub lam: f64,
    pub mu: f64,
    pub sigma: f64,
    pub p: f64,
    pub eps_a: f64,
    pub gamma_a: f64,
    pub d_a: f64,
    pub eps_i: f64,
    pub gamma_i: f64,
    pub d_i: f64,
    pub gamma_h: f64,
    pub d_h: f64,
}

impl Default for ParameterSet {
    /// The reference COVID-19 parameter table.
    ///
    /// Three entries are published as ranges rather than points; the
    /// defaults pin them as follows: `beta1` at the upper end `5.2e-3` of
    /// its range, `beta2` at `0.6 * beta1` (the ratio the replication
    /// scenarios use), and `p = 0.6201` (the value every replication
    /// scenario uses).
    fn default() -> Self {
        ParameterSet {
            lambda_in: 108.63,
            beta1: 5.2e-3,
            beta2: 0.6 * 5.2e-3,
            b: 70.0,
            theta: 0.0494,
            q: 0.071,
            lam: 0.1003,
            mu: 0.00029,
            sigma: 0.2,
            p: 0.6201,
            eps_a: 0.1,
            gamma_a: 0.15,
            d_a: 0.005,
            eps_i: 0.33,
            gamma_i: 0.1001,
            d_i: 0.008,
            gamma_h: 0.14,
            d_h: 0.004,
        }
    }
}

macro_rules! check_nonneg {
    ($set:expr, $($field:ident),+) => {
        $(
            if !$set.$field.is_finite() || $set.$field < 0.0 {
                return Err(ModelError::InvalidParameter {
                    name: stringify!($field),
                    reason: format!("must be finite and >= 0, got {}", $set.$field),
                });
            }
        )+
    };
}

impl ParameterSet {
    /// Validates every invariant and freezes the set into [`ModelParameters`].
    ///
    /// Invariants: all fields finite and nonnegative, `beta1 >= beta2`,
    /// `0 < theta < 1`, `0 < p < 1`, `mu > 0`, `b > 0`.
    pub fn validate(self) -> Result<ModelParameters, ModelError> {
        check_nonneg!(
            self, lambda_in, beta1, beta2, b, theta, q, lam, mu, sigma, p, eps_a, gamma_a, d_a,
            eps_i, gamma_i, d_i, gamma_h, d_h
        );
        if self.beta1 < self.beta2 {
            return Err(ModelError::InvalidParameter {
                name: "beta2",
                reason: format!(
                    "beta1 >= beta2 required, got beta1 = {} < beta2 = {}",
                    self.beta1, self.beta2
                ),
            });
        }
        if self.theta <= 0.0 || self.theta >= 1.0 {
            return Err(ModelError::InvalidParameter {
                name: "theta",
                reason: format!("must lie strictly in (0, 1), got {}", self.theta),
            });
        }
        if self.p <= 0.0 || self.p >= 1.0 {
            return Err(ModelError::InvalidParameter {
                name: "p",
                reason: format!("must lie strictly in (0, 1), got {}", self.p),
            });
        }
        if self.mu <= 0.0 {
            return Err(ModelError::InvalidParameter {
                name: "mu",
                reason: format!("must be > 0, got {}", self.mu),
            });
        }
        if self.b <= 0.0 {
            return Err(ModelError::InvalidParameter {
                name: "b",
                reason: format!("must be > 0, got {}", self.b),
            });
        }
        Ok(ModelParameters(self))
    }
}

/// A validated, immutable parameter set.
///
/// Construction goes through [`ParameterSet::validate`], so every instance
/// satisfies the model invariants; downstream formulas rely on that and never
/// re-check. Accessors are named after the underlying fields.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParameters(ParameterSet);

macro_rules! getters {
    ($($field:ident),+) => {
        $(
            #[doc = concat!("The validated `", stringify!($field), "` value.")]
            pub fn $field(&self) -> f64 {
                self.0.$field
            }
        )+
    };
}

impl ModelParameters {
    getters!(
        lambda_in, beta1, beta2, b, theta, q, lam, mu, sigma, p, eps_a, gamma_a, d_a, eps_i,
        gamma_i, d_i, gamma_h, d_h
    );

    /// The reference parameter table (always valid).
    pub fn table() -> Self {
        ParameterSet::default()
            .validate()
            .expect("reference table satisfies all invariants")
    }

    /// The underlying raw set, e.g. for tweaking single fields in a copy.
    pub fn raw(&self) -> ParameterSet {
        self.0
    }

    /// FNV-1a hash of the parameter bit patterns, in field order.
    ///
    /// Stable across runs and platforms; recorded in trajectory metadata so
    /// outputs can be matched to the exact inputs that produced them.
    pub fn fingerprint(&self) -> u64 {
        let s = &self.0;
        let fields = [
            s.lambda_in,
            s.beta1,
            s.beta2,
            s.b,
            s.theta,
            s.q,
            s.lam,
            s.mu,
            s.sigma,
            s.p,
            s.eps_a,
            s.gamma_a,
            s.d_a,
            s.eps_i,
            s.gamma_i,
            s.d_i,
            s.gamma_h,
            s.d_h,
        ];
        let mut h: u64 = 0xcbf29ce484222325;
        for v in fields {
            for byte in v.to_bits().to_le_bytes() {
                h = (h ^ u64::from(byte)).wrapping_mul(0x100000001b3);
            }
        }
        h
    }
}

/// Population state (individual counts), ordered (S, Q, E, A, I, H, R).
///
/// `q_c` is the quarantined compartment; the trailing `_c` avoids a clash
/// with the quarantine-rate parameter `q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct State {
    pub s: f64,
    pub q_c: f64,
    pub e: f64,
    pub a: f64,
    pub i: f64,
    pub h: f64,
    pub r: f64,
}

impl State {
    pub fn new(s: f64, q_c: f64, e: f64, a: f64, i: f64, h: f64, r: f64) -> Self {
        State {
            s,
            q_c,
            e,
            a,
            i,
            h,
            r,
        }
    }

    /// State with every compartment zero.
    pub fn zero() -> Self {
        State::from_array([0.0; 7])
    }

    pub fn from_array(x: [f64; 7]) -> Self {
        State {
            s: x[0],
            q_c: x[1],
            e: x[2],
            a: x[3],
            i: x[4],
            h: x[5],
            r: x[6],
        }
    }

    pub fn as_array(&self) -> [f64; 7] {
        [self.s, self.q_c, self.e, self.a, self.i, self.h, self.r]
    }

    /// Value of one compartment.
    pub fn get(&self, c: Compartment) -> f64 {
        self.as_array()[c.index()]
    }

    /// Total population N = S + Q + E + A + I + H + R.
    pub fn total_population(&self) -> f64 {
        self.as_array().iter().sum()
    }

    /// True when every compartment is >= 0.
    pub fn is_nonnegative(&self) -> bool {
        self.as_array().iter().all(|&v| v >= 0.0)
    }

    /// Componentwise `max(x, floor)`.
    pub fn clamped(&self, floor: f64) -> Self {
        let mut x = self.as_array();
        for v in &mut x {
            *v = v.max(floor);
        }
        State::from_array(x)
    }
}

/// Diffusion intensities, one per compartment in canonical order (per √day).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseIntensities {
    pub sig1: f64,
    pub sig2: f64,
    pub sig3: f64,
    pub sig4: f64,
    pub sig5: f64,
    pub sig6: f64,
    pub sig7: f64,
}

impl NoiseIntensities {
    /// Builds intensities from canonical-order values, rejecting negatives.
    pub fn new(sig: [f64; 7]) -> Result<Self, ModelError> {
        for (k, &v) in sig.iter().enumerate() {
            if !v.is_finite() || v < 0.0 {
                return Err(ModelError::InvalidParameter {
                    name: "sig",
                    reason: format!("sig{} must be finite and >= 0, got {}", k + 1, v),
                });
            }
        }
        Ok(NoiseIntensities {
            sig1: sig[0],
            sig2: sig[1],
            sig3: sig[2],
            sig4: sig[3],
            sig5: sig[4],
            sig6: sig[5],
            sig7: sig[6],
        })
    }

    /// All intensities zero (the deterministic limit).
    pub fn zero() -> Self {
        NoiseIntensities::new([0.0; 7]).expect("zeros are valid")
    }

    pub fn as_array(&self) -> [f64; 7] {
        [
            self.sig1, self.sig2, self.sig3, self.sig4, self.sig5, self.sig6, self.sig7,
        ]
    }

    /// Largest squared intensity, max σk².
    pub fn max_sq(&self) -> f64 {
        self.as_array().iter().map(|v| v * v).fold(0.0, f64::max)
    }

    /// Smallest squared intensity among the infected channels (E, A, I).
    pub fn min_sq_infected(&self) -> f64 {
        [self.sig3, self.sig4, self.sig5]
            .iter()
            .map(|v| v * v)
            .fold(f64::INFINITY, f64::min)
    }

    /// Sum of all squared intensities, Σ σk².
    pub fn sum_sq(&self) -> f64 {
        self.as_array().iter().map(|v| v * v).sum()
    }
}

/// Slack widths for the invariant-region tests.
///
/// `eta` widens the upper population bound N <= Λ/μ + η and `eta_prime`
/// widens the lower bound N >= Λ/(μ + dA + dI + dH) − η′.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionSpec {
    pub eta: f64,
    pub eta_prime: f64,
}

impl RegionSpec {
    pub fn new(eta: f64, eta_prime: f64) -> Result<Self, ModelError> {
        if !eta.is_finite() || eta < 0.0 {
            return Err(ModelError::InvalidParameter {
                name: "eta",
                reason: format!("must be finite and >= 0, got {eta}"),
            });
        }
        if !eta_prime.is_finite() || eta_prime < 0.0 {
            return Err(ModelError::InvalidParameter {
                name: "eta_prime",
                reason: format!("must be finite and >= 0, got {eta_prime}"),
            });
        }
        Ok(RegionSpec { eta, eta_prime })
    }
}

/// Which invariant regions a state belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RegionMembership {
    /// N <= Λ/μ + η (upper population band).
    pub in_d_eta: bool,
    /// N >= Λ/(μ + dA + dI + dH) − η′ (lower population band).
    pub in_d_eta_prime: bool,
    /// Both bounds at once.
    pub in_d_band: bool,
    /// Inside the band with S <= S° and Q <= Q° on top.
    pub in_script_s: bool,
}

/// Time derivative of the state, in canonical compartment order.
pub type StateDerivative = [f64; 7];

/// Media-modulated contact rate `beta1 - beta2 * I / (b + I)`.
///
/// Nonincreasing in the symptomatic count and confined to
/// `[beta1 - beta2, beta1]`. Rejects negative counts; clamping is an
/// integrator policy, not a model one.
pub fn effective_contact_rate(params: &ModelParameters, i_count: f64) -> Result<f64, ModelError> {
    if !(i_count >= 0.0) {
        return Err(ModelError::NegativeInput {
            what: "symptomatic count I",
            value: i_count,
        });
    }
    Ok(params.beta1() - params.beta2() * i_count / (params.b() + i_count))
}

/// New-infection flow `(beta1 - beta2*I/(b+I)) * S * (I + theta*A)`.
///
/// Nonnegative on nonnegative states; zero when S = 0 or when both I and A
/// vanish. The expression extends continuously to the tiny negative
/// excursions Runge-Kutta stages may probe near the boundary.
pub fn incidence(params: &ModelParameters, state: &State) -> f64 {
    let rate = params.beta1() - params.beta2() * state.i / (params.b() + state.i);
    rate * state.s * (state.i + params.theta() * state.a)
}

/// Deterministic vector field of the SQEAIHR system.
///
/// Component sum collapses to the population balance
/// `Λ − μN − dA·A − dI·I − dH·H`; the integrators and region tests lean on
/// that identity.
pub fn drift(params: &ModelParameters, state: &State) -> StateDerivative {
    let p = params;
    let x = state;
    let inc = incidence(p, x);
    [
        p.lambda_in() - inc + p.lam() * x.q_c - (p.mu() + p.q()) * x.s,
        p.q() * x.s - (p.mu() + p.lam()) * x.q_c,
        inc - (p.mu() + p.sigma()) * x.e,
        (1.0 - p.p()) * p.sigma() * x.e - (p.mu() + p.eps_a() + p.gamma_a() + p.d_a()) * x.a,
        p.sigma() * p.p() * x.e - (p.mu() + p.eps_i() + p.gamma_i() + p.d_i()) * x.i,
        p.eps_i() * x.i + p.eps_a() * x.a - (p.mu() + p.d_h() + p.gamma_h()) * x.h,
        p.gamma_h() * x.h + p.gamma_i() * x.i + p.gamma_a() * x.a - p.mu() * x.r,
    ]
}

/// Diagonal diffusion coefficients `G_k = sig_k * X_k`.
///
/// Positively homogeneous of degree one in the state; a zero state yields a
/// zero vector regardless of the intensities.
pub fn diffusion(noise: &NoiseIntensities, state: &State) -> [f64; 7] {
    let sig = noise.as_array();
    let x = state.as_array();
    let mut g = [0.0; 7];
    for k in 0..7 {
        g[k] = sig[k] * x[k];
    }
    g
}

/// Tests a state against the invariant regions.
///
/// The upper region needs `N <= Λ/μ + η`, the lower one
/// `N >= Λ/(μ + dA + dI + dH) − η′`; both bounds are inclusive. The script-S
/// region additionally caps susceptibles and quarantined at their
/// disease-free values S° and Q°.
pub fn region_membership(
    state: &State,
    params: &ModelParameters,
    spec: &RegionSpec,
) -> RegionMembership {
    let n = state.total_population();
    let carrying = params.lambda_in() / params.mu();
    let lower = params.lambda_in() / (params.mu() + params.d_a() + params.d_i() + params.d_h());
    // Disease-free S and Q, same formulas as analysis::compute_dfe.
    let denom = params.mu() + params.q() + params.lam();
    let s_o = carrying * (params.mu() + params.lam()) / denom;
    let q_o = carrying * params.q() / denom;

    let in_d_eta = n <= carrying + spec.eta;
    let in_d_eta_prime = n >= lower - spec.eta_prime;
    let in_d_band = in_d_eta && in_d_eta_prime;
    let in_script_s = in_d_band && state.s <= s_o && state.q_c <= q_o;
    RegionMembership {
        in_d_eta,
        in_d_eta_prime,
        in_d_band,
        in_script_s,
    }
}

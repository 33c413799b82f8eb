//! Deterministic and stochastic dynamics of an SQEAIHR epidemic model.
//!
//! The model splits a population into Susceptible, Quarantined, Exposed,
//! Asymptomatic, symptomatic Infected, Hospitalized and Recovered
//! compartments. Transmission is media-modulated: the effective contact rate
//! `beta1 - beta2*I/(b+I)` drops as reported symptomatic cases rise,
//! saturating at `beta1 - beta2`. The stochastic variant perturbs every
//! compartment with proportional white noise.
//!
//! The crate provides:
//!
//! - [`model`]: parameter/state types, the drift field, the diagonal
//!   diffusion, and invariant-region membership tests;
//! - [`analysis`]: disease-free and endemic equilibria, the basic
//!   reproduction number via next-generation matrices, Jacobian spectral
//!   bounds, and the extinction/persistence threshold report;
//! - [`integrate`]: fixed-step RK4 for the deterministic system and
//!   full-truncation Euler-Maruyama for the stochastic one, driven by a
//!   counter-based randomness contract that is bit-reproducible;
//! - [`ensemble`]: seeded Monte Carlo ensembles, time averages, extinction
//!   and persistence estimators;
//! - [`scenario`]: the `key = value` configuration format and the canned
//!   figure-replication scenarios;
//! - [`render`]: CSV and report text emission, byte-deterministic;
//! - `cli` (feature `cli`, on by default): the `sqeaihr` command-line
//!   front end.
//!
//! A reference parameter table ships with the crate
//! ([`model::ParameterSet::default`]); every scenario starts from it and
//! overrides only what it needs.

pub mod analysis;
#[cfg(feature = "cli")]
pub mod cli;
pub mod ensemble;
pub mod integrate;
pub mod model;
pub mod render;
mod rng;
pub mod scenario;

//! Certified stop-loss error bounds for binomial approximation of sums of
//! (locally dependent) Bernoulli default indicators, validated against exact
//! oracles, with bracketed CDO tranche pricing on top.
//!
//! The layering is bottom-up:
//!
//! * [`pmf`] — exact finite laws on the non-negative integers and the scalar
//!   functionals (call expectation, shifted total-variation, moments) that
//!   everything else consumes.
//! * [`stein`] — the exact Stein-equation solution for the binomial target
//!   and the difference envelopes the published bounds rest on.
//! * [`stoploss`] — the exact stop-loss distance; the ground truth every
//!   bound must dominate.
//! * [`dependence`] — portfolio models (independent, explicit joint, latent
//!   one-dependent) and exact or Monte Carlo evaluation of every expectation
//!   the bounds need.
//! * [`bounds`] — the two parameter fits and the full family of error
//!   bounds, assembled into reports.
//! * [`cdo`] — tranche pricing with certified error brackets.
//! * [`config`] / [`benchmark`] / [`verify`] — the JSON surface, the built-in
//!   comparison corpus, and the self-verification suites.

pub mod benchmark;
pub mod bounds;
pub mod cdo;
pub mod config;
pub mod dependence;
pub mod error;
pub mod pmf;
mod poly;
pub mod rng;
pub mod stein;
pub mod stoploss;
pub mod verify;

pub use error::{Error, Result};

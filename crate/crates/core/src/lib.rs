//! Bayesian estimation of cognitive diagnosis models by Gibbs sampling.
//!
//! A cognitive diagnosis model (CDM) explains binary item responses
//! `Y[i][j] ∈ {0,1}` of `N` examinees on `J` items through `K` latent binary
//! attributes per examinee.  A `J × K` Q-matrix declares which attributes
//! each item requires.  This crate implements two response models:
//!
//! * **DINA** — conjunctive: an examinee holding every required attribute of
//!   item `j` answers correctly with probability `1 − s[j]` (slip), anyone
//!   else with probability `g[j]` (guess).
//! * **Probit G-DINA** — the saturated model: the success probability is
//!   `Φ(X'λ[j])` where `X` is a full-interaction design vector over the
//!   attributes required by item `j` and `Φ` is the standard normal CDF.
//!
//! Three Gibbs samplers estimate attribute profiles, item parameters, and
//! the population distribution `π` over the `2^K` attribute classes:
//!
//! * [`samplers::run_sequential_dina`] / [`samplers::run_sequential_gdina`]
//!   update one attribute at a time; the conditional of `α[i][k]` involves
//!   a two-entry lookup into `π` and only the items requiring attribute `k`,
//!   so cost grows linearly in `K` and the samplers remain practical for
//!   large attribute spaces.
//! * [`samplers::run_simultaneous`] redraws an examinee's whole profile from
//!   the full `2^K`-way categorical conditional — the classical collapsed
//!   update, exponential in `K`.
//! * [`samplers::run_independent`] drops `π` and treats attributes as
//!   independent Bernoulli variables with pooled rates — a deliberately
//!   misspecified baseline for structured populations.
//!
//! Supporting modules: [`model`] (Q-matrices, profiles, response
//! probabilities, likelihoods), [`distributions`] (reproducible RNG streams
//! and the exact conditional distributions used by the samplers),
//! [`simulate`] (synthetic data generation), [`eval`] (point estimates,
//! recovery metrics, convergence diagnostics), and [`fixtures`] (bundled
//! Q-matrices).

pub mod distributions;
pub mod error;
pub mod eval;
pub mod fixtures;
pub mod model;
pub mod samplers;
pub mod simulate;

pub use error::{Error, Result};

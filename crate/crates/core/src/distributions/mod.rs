//! Random number streams and the conditional distributions used by the
//! Gibbs samplers.
//!
//! Everything here is deterministic given an [`rng::RngStream`]: the same
//! seed always reproduces the same draws, and `split` derives statistically
//! independent child streams from a parent seed so that work can be
//! distributed across threads without changing results.

pub mod blr;
pub mod normal;
pub mod quadrature;
pub mod rng;
pub mod truncated;

pub use blr::{blr_posterior, BlrPosterior};
pub use normal::{normal_cdf, normal_ln_cdf, normal_ln_pdf, normal_pdf, normal_quantile, normal_sf};
pub use quadrature::{gauss_legendre, gauss_legendre_on};
pub use rng::RngStream;
pub use truncated::{
    beta_sample, bernoulli, dirichlet_sample, mvn_chain_conditionals, trunc_mvn_sequential_sample,
    trunc_normal_sample, ChainConditional, Interval,
};

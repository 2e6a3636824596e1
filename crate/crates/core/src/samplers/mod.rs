//! Gibbs samplers for the DINA and probit G-DINA models.
//!
//! Three posterior samplers share one data-augmentation backbone and differ
//! only in how they update attribute profiles:
//!
//! * **sequential** ([`run_sequential_dina`], [`run_sequential_gdina`]) —
//!   one attribute at a time.  The conditional success probability of
//!   `α[i][k]` needs exactly two entries of the class distribution `π`
//!   (the two classes that agree with the examinee's other attributes) and
//!   the items requiring attribute `k`, so one full sweep costs O(K)
//!   population lookups per examinee rather than O(2^K).
//! * **simultaneous** ([`run_simultaneous`]) — redraws the whole profile
//!   from its `2^K`-way categorical conditional; exponential in `K` and
//!   refused above [`MAX_ATTRS_SIMULTANEOUS`].
//! * **independent** ([`run_independent`]) — drops `π` entirely, treating
//!   attributes as independent coins with pooled rates; a deliberately
//!   misspecified baseline. The recorded `π` draws are the empirical class
//!   frequencies of each iteration's profiles.
//!
//! Update order within one iteration, G-DINA: latent probit responses `Z`,
//! then item coefficients `λ` (conjugate Bayesian regression), then
//! attributes, then `π` (conjugate Dirichlet).  DINA: attributes, then
//! guess/slip (conjugate Beta, slip before the guess so that the guess can
//! be truncated below `1 − s`), then `π`.
//!
//! # Reproducibility
//!
//! A run is a pure function of `(data, configuration, seed)`.  The chain's
//! root stream is split into one *parameter stream* (initialisation, `λ`,
//! guess/slip, `π`, attribute-rate updates) and one stream per examinee
//! (their `Z` and attribute draws).  Worker threads only ever advance
//! per-examinee streams, so results are bit-identical for every worker
//! count.

mod chain;
mod runner;
mod steps;

pub use chain::{ChainStore, FamilySlice, ParamLayout, RunStats};
pub use runner::{
    run_chain, run_independent, run_sequential_dina, run_sequential_gdina, run_simultaneous,
};
pub use steps::{
    attr_conditional_dina, attr_conditional_gdina, prior_conditional_prob, sample_attribute_dina,
    sample_attribute_gdina, sample_augmented, sample_dina_item_params, sample_lambda, sample_pi,
    DinaItemCounts,
};

use crate::distributions::truncated::Interval;
use crate::error::{Error, Result};
use crate::model::{QMatrix, MAX_ATTRIBUTES_FULL_ENUM};
use serde::{Deserialize, Serialize};

/// Largest attribute count accepted by the simultaneous sampler (the
/// categorical update enumerates all `2^K` classes per examinee).
pub const MAX_ATTRS_SIMULTANEOUS: usize = 20;

/// Response model to fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    /// Conjunctive DINA model with guess/slip item parameters.
    Dina,
    /// Saturated probit G-DINA model.
    Gdina,
}

impl ModelKind {
    /// Canonical lowercase name.
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Dina => "dina",
            ModelKind::Gdina => "gdina",
        }
    }
}

/// Attribute-update strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// One attribute at a time (O(K) population lookups per profile sweep).
    Sequential,
    /// Whole profile at once from the 2^K-way conditional.
    Simultaneous,
    /// Independent-attribute baseline without a structured population.
    Independent,
}

impl Method {
    /// Canonical lowercase name.
    pub fn name(self) -> &'static str {
        match self {
            Method::Sequential => "sequential",
            Method::Simultaneous => "simultaneous",
            Method::Independent => "independent",
        }
    }
}

/// Dirichlet concentration for the class distribution `π`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DeltaPrior {
    /// The same concentration `δ` for every class.
    Symmetric(f64),
    /// One concentration per class (length must be `2^K`).
    PerClass(Vec<f64>),
}

impl DeltaPrior {
    /// Expands to a full concentration vector for `n_classes` classes.
    pub fn expand(&self, n_classes: usize) -> Result<Vec<f64>> {
        match self {
            DeltaPrior::Symmetric(d) => {
                if !(d.is_finite() && *d > 0.0) {
                    return Err(Error::config(format!(
                        "Dirichlet concentration must be positive and finite, got {d}"
                    )));
                }
                Ok(vec![*d; n_classes])
            }
            DeltaPrior::PerClass(v) => {
                if v.len() != n_classes {
                    return Err(Error::config(format!(
                        "per-class concentration vector has length {}, expected {n_classes}",
                        v.len()
                    )));
                }
                if let Some(d) = v.iter().find(|d| !(d.is_finite() && **d > 0.0)) {
                    return Err(Error::config(format!(
                        "Dirichlet concentrations must be positive and finite, got {d}"
                    )));
                }
                Ok(v.clone())
            }
        }
    }
}

impl Default for DeltaPrior {
    fn default() -> Self {
        DeltaPrior::Symmetric(1.0)
    }
}

/// Normal prior on probit G-DINA coefficients.
///
/// The intercept gets `N(intercept_mean, intercept_sd²)`; an interaction
/// term of order `w ≥ 1` gets `N(effect_mean / w, (effect_sd / w)²)`, so
/// higher-order effects shrink toward zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GdinaPrior {
    /// Prior mean of the intercept.
    pub intercept_mean: f64,
    /// Prior standard deviation of the intercept.
    pub intercept_sd: f64,
    /// Base prior mean of effect terms (divided by the interaction order).
    pub effect_mean: f64,
    /// Base prior sd of effect terms (divided by the interaction order).
    pub effect_sd: f64,
}

impl Default for GdinaPrior {
    fn default() -> Self {
        GdinaPrior {
            intercept_mean: -1.2,
            intercept_sd: 0.4,
            effect_mean: 0.9,
            effect_sd: 0.3,
        }
    }
}

impl GdinaPrior {
    /// Validates the prior's scale parameters.
    pub fn validate(&self) -> Result<()> {
        if !(self.intercept_sd.is_finite() && self.intercept_sd > 0.0)
            || !(self.effect_sd.is_finite() && self.effect_sd > 0.0)
            || !self.intercept_mean.is_finite()
            || !self.effect_mean.is_finite()
        {
            return Err(Error::config(
                "G-DINA prior means must be finite and sds positive",
            ));
        }
        Ok(())
    }

    /// Prior mean and standard deviation for one coefficient, identified by
    /// its term mask.
    pub fn coef_prior(&self, term_mask: u32) -> (f64, f64) {
        let w = term_mask.count_ones();
        if w == 0 {
            (self.intercept_mean, self.intercept_sd)
        } else {
            (self.effect_mean / w as f64, self.effect_sd / w as f64)
        }
    }
}

/// Beta priors and the monotonicity constraint for DINA guess/slip
/// parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DinaPrior {
    /// Beta shape `a` of the guessing prior.
    pub guess_a: f64,
    /// Beta shape `b` of the guessing prior.
    pub guess_b: f64,
    /// Beta shape `a` of the slipping prior.
    pub slip_a: f64,
    /// Beta shape `b` of the slipping prior.
    pub slip_b: f64,
    /// Enforce `g < 1 − s` by truncating the guess draw below `1 − s`.
    pub monotone: bool,
}

impl Default for DinaPrior {
    fn default() -> Self {
        DinaPrior {
            guess_a: 1.0,
            guess_b: 1.0,
            slip_a: 1.0,
            slip_b: 1.0,
            monotone: true,
        }
    }
}

impl DinaPrior {
    /// Validates the Beta shape parameters.
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("guess_a", self.guess_a),
            ("guess_b", self.guess_b),
            ("slip_a", self.slip_a),
            ("slip_b", self.slip_b),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(format!(
                    "DINA prior shape {name} must be positive and finite, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Truncation applied to G-DINA coefficient draws.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Truncation {
    /// No truncation (the coefficient posterior is sampled exactly).
    None,
    /// Monotone region: intercept `≤ 0`, every effect `≥ 0`.
    Monotone,
    /// Explicit per-item, per-coefficient intervals.
    Custom(Vec<Vec<Interval>>),
}

impl Default for Truncation {
    fn default() -> Self {
        Truncation::None
    }
}

impl Truncation {
    /// Resolves the truncation intervals for item `j` with `n_coefs`
    /// coefficients; `None` means unconstrained.
    pub fn intervals_for(&self, j: usize, n_coefs: usize) -> Result<Option<Vec<Interval>>> {
        match self {
            Truncation::None => Ok(None),
            Truncation::Monotone => {
                let mut v = vec![Interval::nonnegative(); n_coefs];
                v[0] = Interval::nonpositive();
                Ok(Some(v))
            }
            Truncation::Custom(per_item) => {
                let itvs = per_item.get(j).ok_or_else(|| {
                    Error::config(format!(
                        "custom truncation covers {} items but item {} was requested",
                        per_item.len(),
                        j + 1
                    ))
                })?;
                if itvs.len() != n_coefs {
                    return Err(Error::config(format!(
                        "custom truncation for item {} has {} intervals, expected {n_coefs}",
                        j + 1,
                        itvs.len()
                    )));
                }
                for itv in itvs {
                    Interval::new(itv.lo, itv.hi)?;
                }
                Ok(Some(itvs.clone()))
            }
        }
    }
}

/// Full configuration of one sampling run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    /// Response model.
    pub model: ModelKind,
    /// Attribute-update strategy.
    pub method: Method,
    /// Total iterations `M` (including burn-in).
    pub iterations: usize,
    /// Burn-in iterations `B` discarded from the front.
    pub burn_in: usize,
    /// Thinning stride: iteration `B + t·thin` is retained for `t ≥ 1`.
    pub thin: usize,
    /// Dirichlet concentration for `π`.
    pub delta: DeltaPrior,
    /// Prior on G-DINA coefficients.
    pub gdina_prior: GdinaPrior,
    /// Prior on DINA guess/slip parameters.
    pub dina_prior: DinaPrior,
    /// Truncation applied to G-DINA coefficient draws.
    pub truncation: Truncation,
    /// Gibbs refinement sweeps inside each truncated coefficient draw
    /// (0 = the plain sequential-conditional draw).
    pub refine_sweeps: usize,
    /// Visit attributes in a fresh random order per examinee and iteration
    /// instead of ascending order.
    pub random_scan: bool,
    /// Worker threads for the per-examinee phases (0 = rayon default).
    /// Results are bit-identical for every setting.
    pub workers: usize,
    /// RNG seed; the run is a pure function of data, config, and seed.
    pub seed: u64,
    /// Chain index: chain `c` of a multi-chain run derives its streams from
    /// `split(1 + c)` of the seed's root stream.
    pub chain_index: u64,
    /// Emit a progress line every this many iterations (0 = silent).
    pub log_every: usize,
}

impl FitConfig {
    /// A configuration with the conventional defaults for the given model:
    /// DINA runs 2000 iterations with 1000 burn-in, G-DINA 3000 with 2000.
    pub fn new(model: ModelKind, method: Method, seed: u64) -> Self {
        let (iterations, burn_in) = match model {
            ModelKind::Dina => (2000, 1000),
            ModelKind::Gdina => (3000, 2000),
        };
        FitConfig {
            model,
            method,
            iterations,
            burn_in,
            thin: 1,
            delta: DeltaPrior::default(),
            gdina_prior: GdinaPrior::default(),
            dina_prior: DinaPrior::default(),
            truncation: Truncation::default(),
            refine_sweeps: 0,
            random_scan: false,
            workers: 1,
            seed,
            chain_index: 0,
            log_every: 0,
        }
    }

    /// Validates the configuration against a Q-matrix.
    pub fn validate(&self, q: &QMatrix) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::config("iterations must be at least 1"));
        }
        if self.burn_in >= self.iterations {
            return Err(Error::config(format!(
                "burn-in ({}) must be smaller than iterations ({})",
                self.burn_in, self.iterations
            )));
        }
        if self.thin == 0 {
            return Err(Error::config("thinning stride must be at least 1"));
        }
        if (self.iterations - self.burn_in) / self.thin == 0 {
            return Err(Error::config(
                "no iterations would be retained: increase iterations or reduce thinning",
            ));
        }
        let k = q.n_attrs();
        if k > MAX_ATTRIBUTES_FULL_ENUM {
            return Err(Error::data(format!(
                "samplers support at most K={MAX_ATTRIBUTES_FULL_ENUM} attributes, got {k}"
            )));
        }
        if self.method == Method::Simultaneous && k > MAX_ATTRS_SIMULTANEOUS {
            return Err(Error::config(format!(
                "the simultaneous sampler enumerates 2^K classes and supports at most \
                 K={MAX_ATTRS_SIMULTANEOUS}, got {k}; use the sequential sampler instead"
            )));
        }
        self.delta.expand(1usize << k)?;
        self.gdina_prior.validate()?;
        self.dina_prior.validate()?;
        if let Truncation::Custom(per_item) = &self.truncation {
            if per_item.len() != q.n_items() {
                return Err(Error::config(format!(
                    "custom truncation covers {} items but the Q-matrix has {}",
                    per_item.len(),
                    q.n_items()
                )));
            }
            for (j, itvs) in per_item.iter().enumerate() {
                let expect = 1usize << q.item_weight(j);
                if itvs.len() != expect {
                    return Err(Error::config(format!(
                        "custom truncation for item {} has {} intervals, expected {expect}",
                        j + 1,
                        itvs.len()
                    )));
                }
                for itv in itvs {
                    Interval::new(itv.lo, itv.hi)?;
                }
            }
        }
        Ok(())
    }

    /// Number of retained (post burn-in, thinned) iterations.
    pub fn n_kept(&self) -> usize {
        (self.iterations - self.burn_in) / self.thin
    }

    /// Whether iteration `m` (1-based) is retained.
    pub fn keeps(&self, m: usize) -> bool {
        m > self.burn_in && (m - self.burn_in) % self.thin == 0
    }
}

//! Configuration resolution: JSON config files, command-line flags, and
//! defaults, merged in that order of increasing precedence.
//!
//! Config files mirror the library configuration field names exactly
//! (`iterations`, `burn_in`, `delta`, `gdina_prior`, …), so a file can be
//! copied from a manifest's `config` snapshot and edited.

use std::path::Path;

use cdm_core::error::{Error, Result};
use cdm_core::samplers::{
    DeltaPrior, DinaPrior, FitConfig, GdinaPrior, Method, ModelKind, Truncation,
};
use clap::ValueEnum;
use cdm_core::distributions::Interval;
use serde::{Deserialize, Serialize};

/// Clap-facing mirror of [`ModelKind`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Dina,
    Gdina,
}

impl From<ModelArg> for ModelKind {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Dina => ModelKind::Dina,
            ModelArg::Gdina => ModelKind::Gdina,
        }
    }
}

/// Clap-facing mirror of [`Method`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Sequential,
    Simultaneous,
    Independent,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Sequential => Method::Sequential,
            MethodArg::Simultaneous => Method::Simultaneous,
            MethodArg::Independent => Method::Independent,
        }
    }
}

/// One coefficient's truncation interval in a JSON file; a missing bound
/// means unbounded on that side.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntervalSpec {
    pub lo: Option<f64>,
    pub hi: Option<f64>,
}

impl IntervalSpec {
    fn to_interval(self) -> Result<Interval> {
        Interval::new(
            self.lo.unwrap_or(f64::NEG_INFINITY),
            self.hi.unwrap_or(f64::INFINITY),
        )
    }
}

/// Truncation in a JSON config file: `"none"`, `"monotone"`, or
/// `{"custom": [[{"lo": 0}, …], …]}` with one interval list per item.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TruncationSpec {
    None,
    Monotone,
    Custom(Vec<Vec<IntervalSpec>>),
}

impl TruncationSpec {
    /// Converts to the library representation, validating every interval.
    pub fn to_core(&self) -> Result<Truncation> {
        Ok(match self {
            TruncationSpec::None => Truncation::None,
            TruncationSpec::Monotone => Truncation::Monotone,
            TruncationSpec::Custom(items) => Truncation::Custom(
                items
                    .iter()
                    .map(|itvs| itvs.iter().map(|s| s.to_interval()).collect())
                    .collect::<Result<Vec<Vec<Interval>>>>()?,
            ),
        })
    }
}

/// Parses the `--truncation` flag: `none`, `monotone`, or
/// `custom:<file>` where the file holds a JSON array of per-item interval
/// lists.
pub fn parse_truncation_flag(arg: &str) -> Result<Truncation> {
    match arg {
        "none" => Ok(Truncation::None),
        "monotone" => Ok(Truncation::Monotone),
        other => {
            let path = other.strip_prefix("custom:").ok_or_else(|| {
                Error::config(format!(
                    "--truncation must be \"none\", \"monotone\", or \"custom:<file>\", \
                     got {other:?}"
                ))
            })?;
            let items: Vec<Vec<IntervalSpec>> =
                crate::formats::from_json_config(Path::new(path))?;
            TruncationSpec::Custom(items).to_core()
        }
    }
}

/// A fit config file: every field optional, names mirroring [`FitConfig`].
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitFileConfig {
    pub model: Option<ModelKind>,
    pub method: Option<Method>,
    pub iterations: Option<usize>,
    pub burn_in: Option<usize>,
    pub thin: Option<usize>,
    pub delta: Option<DeltaPrior>,
    pub gdina_prior: Option<GdinaPrior>,
    pub dina_prior: Option<DinaPrior>,
    pub truncation: Option<TruncationSpec>,
    pub refine_sweeps: Option<usize>,
    pub random_scan: Option<bool>,
    pub workers: Option<usize>,
    pub seed: Option<u64>,
    pub log_every: Option<usize>,
    pub chains: Option<usize>,
}

impl FitFileConfig {
    /// Parses a fit config file, reporting the path on failure.
    pub fn load(path: &Path) -> Result<Self> {
        crate::formats::from_json_config(path)
    }
}

/// Flag-level overrides for a fit; `None` means "not given".
#[derive(Debug, Clone, Default)]
pub struct FitOverrides {
    pub model: Option<ModelKind>,
    pub method: Option<Method>,
    pub iters: Option<usize>,
    pub burn_in: Option<usize>,
    pub thin: Option<usize>,
    pub delta: Option<f64>,
    pub truncation: Option<Truncation>,
    pub refine_sweeps: Option<usize>,
    pub random_scan: Option<bool>,
    pub workers: Option<usize>,
    pub seed: Option<u64>,
    pub log_every: Option<usize>,
    pub chains: Option<usize>,
}

/// Progress-line default: one log line per this many iterations.
pub const DEFAULT_LOG_EVERY: usize = 100;

/// Merges defaults, config file, and flags into a full [`FitConfig`] plus
/// the number of chains to run. Flags beat the file; the file beats the
/// model-specific defaults.
pub fn resolve_fit(file: Option<&FitFileConfig>, ov: &FitOverrides) -> Result<(FitConfig, usize)> {
    let empty = FitFileConfig::default();
    let file = file.unwrap_or(&empty);

    let model = ov.model.or(file.model).unwrap_or(ModelKind::Dina);
    let method = ov.method.or(file.method).unwrap_or(Method::Sequential);
    let seed = ov.seed.or(file.seed).unwrap_or(0);
    let mut cfg = FitConfig::new(model, method, seed);

    if let Some(v) = ov.iters.or(file.iterations) {
        cfg.iterations = v;
    }
    if let Some(v) = ov.burn_in.or(file.burn_in) {
        cfg.burn_in = v;
    }
    if let Some(v) = ov.thin.or(file.thin) {
        cfg.thin = v;
    }
    if let Some(d) = ov.delta {
        cfg.delta = DeltaPrior::Symmetric(d);
    } else if let Some(d) = &file.delta {
        cfg.delta = d.clone();
    }
    if let Some(p) = &file.gdina_prior {
        cfg.gdina_prior = p.clone();
    }
    if let Some(p) = &file.dina_prior {
        cfg.dina_prior = p.clone();
    }
    if let Some(t) = &ov.truncation {
        cfg.truncation = t.clone();
    } else if let Some(t) = &file.truncation {
        cfg.truncation = t.to_core()?;
    }
    if let Some(v) = ov.refine_sweeps.or(file.refine_sweeps) {
        cfg.refine_sweeps = v;
    }
    if let Some(v) = ov.random_scan.or(file.random_scan) {
        cfg.random_scan = v;
    }
    if let Some(v) = ov.workers.or(file.workers) {
        cfg.workers = v;
    }
    cfg.log_every = ov.log_every.or(file.log_every).unwrap_or(DEFAULT_LOG_EVERY);

    let chains = ov.chains.or(file.chains).unwrap_or(1);
    if chains == 0 {
        return Err(Error::config("--chains must be at least 1"));
    }
    Ok((cfg, chains))
}

//! `cdm fit`: run one or more MCMC chains on a dataset directory.

use std::path::{Path, PathBuf};

use cdm_core::error::{Error, Result};
use cdm_core::samplers::{run_chain, ChainStore, FitConfig};
use clap::Args;
use serde::{Deserialize, Serialize};

use crate::config::{
    parse_truncation_flag, resolve_fit, FitFileConfig, FitOverrides, MethodArg, ModelArg,
};
use crate::formats::{create_dir, read_q_csv, read_y_csv, write_chain_dir, AlphaFormat};
use crate::manifest::{PhaseClock, RunManifest};

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Dataset directory containing Q.csv and Y.csv.
    #[arg(long, env = "CDM_DATA", value_name = "DIR")]
    pub data: PathBuf,

    /// Optional JSON config file (field names match the library's
    /// FitConfig); flags override it.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Measurement model.
    #[arg(long, env = "CDM_MODEL", value_enum)]
    pub model: Option<ModelArg>,

    /// Attribute-update strategy.
    #[arg(long, env = "CDM_METHOD", value_enum)]
    pub method: Option<MethodArg>,

    /// RNG seed (chain c derives its stream from seed and chain index).
    #[arg(long, env = "CDM_SEED")]
    pub seed: Option<u64>,

    /// Total MCMC iterations per chain.
    #[arg(long, env = "CDM_ITERS")]
    pub iters: Option<usize>,

    /// Burn-in iterations to discard.
    #[arg(long, env = "CDM_BURN_IN")]
    pub burn_in: Option<usize>,

    /// Keep every thin-th post-burn-in draw.
    #[arg(long, env = "CDM_THIN")]
    pub thin: Option<usize>,

    /// Symmetric Dirichlet concentration for the class distribution.
    #[arg(long, env = "CDM_DELTA")]
    pub delta: Option<f64>,

    /// "none", "monotone", or "custom:<file>" (JSON per-item intervals).
    #[arg(long, env = "CDM_TRUNCATION", value_name = "SPEC")]
    pub truncation: Option<String>,

    /// Extra within-iteration attribute sweeps.
    #[arg(long)]
    pub refine_sweeps: Option<usize>,

    /// Visit attributes in random order instead of 1..K.
    #[arg(long, value_name = "BOOL")]
    pub random_scan: Option<bool>,

    /// Threads in the per-chain examinee pool (0 = single-threaded).
    #[arg(long, env = "CDM_WORKERS")]
    pub workers: Option<usize>,

    /// Number of independent chains to run concurrently.
    #[arg(long, env = "CDM_CHAINS")]
    pub chains: Option<usize>,

    /// Progress-log period in iterations (0 disables progress lines).
    #[arg(long)]
    pub log_every: Option<usize>,

    /// How to store retained attribute-profile draws.
    #[arg(long, value_enum, default_value = "csv")]
    pub alpha_format: AlphaFormat,

    /// Output directory; one chain{c}/ subdirectory per chain.
    #[arg(long, env = "CDM_OUT", value_name = "DIR")]
    pub out: PathBuf,
}

/// Everything `execute` needs, as snapshotted into the manifest.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResolvedFit {
    /// Dataset directory holding Q.csv and Y.csv.
    pub data: PathBuf,
    /// Number of chains.
    pub chains: usize,
    /// Storage format for attribute draws.
    pub alpha_format: AlphaFormat,
    /// Full sampler configuration (chain_index is set per chain).
    pub fit: FitConfig,
}

pub fn run(args: &FitArgs) -> Result<()> {
    let file = args.config.as_deref().map(FitFileConfig::load).transpose()?;
    let ov = FitOverrides {
        model: args.model.map(Into::into),
        method: args.method.map(Into::into),
        iters: args.iters,
        burn_in: args.burn_in,
        thin: args.thin,
        delta: args.delta,
        truncation: args
            .truncation
            .as_deref()
            .map(parse_truncation_flag)
            .transpose()?,
        refine_sweeps: args.refine_sweeps,
        random_scan: args.random_scan,
        workers: args.workers,
        seed: args.seed,
        log_every: args.log_every,
        chains: args.chains,
    };
    let (fit, chains) = resolve_fit(file.as_ref(), &ov)?;
    let resolved = ResolvedFit {
        data: args.data.clone(),
        chains,
        alpha_format: args.alpha_format,
        fit,
    };
    execute(&resolved, &args.out)
}

/// Fits `chains` independent chains and writes one `chain{c}/` directory
/// per chain under `out`.
pub fn execute(r: &ResolvedFit, out: &Path) -> Result<()> {
    let mut clock = PhaseClock::new();
    let q_path = r.data.join("Q.csv");
    let y_path = r.data.join("Y.csv");

    let (q, y) = clock.time("load", || {
        let q = read_q_csv(&q_path)?;
        let y = read_y_csv(&y_path)?;
        if y.n_items() != q.n_items() {
            return Err(Error::data(format!(
                "Y.csv has {} items but Q.csv has {} rows",
                y.n_items(),
                q.n_items()
            )));
        }
        Ok((q, y))
    })?;
    r.fit.validate(&q)?;

    log::info!(
        "fitting {} {} on N={} J={} K={}: {} chains, {} iterations each",
        r.fit.method.name(),
        r.fit.model.name(),
        y.n_examinees(),
        q.n_items(),
        q.n_attrs(),
        r.chains,
        r.fit.iterations
    );

    let stores = clock.time("fit", || {
        let mut slots: Vec<Option<Result<ChainStore>>> = (0..r.chains).map(|_| None).collect();
        std::thread::scope(|scope| {
            for (c, slot) in slots.iter_mut().enumerate() {
                let (y, q) = (&y, &q);
                let mut cfg = r.fit.clone();
                cfg.chain_index = c as u64;
                scope.spawn(move || *slot = Some(run_chain(y, q, &cfg)));
            }
        });
        slots
            .into_iter()
            .map(|s| s.expect("chain thread finished"))
            .collect::<Result<Vec<ChainStore>>>()
    })?;

    create_dir(out)?;
    let outputs = clock.time("write", || {
        let mut outputs = Vec::new();
        for (c, store) in stores.iter().enumerate() {
            let name = format!("chain{c}");
            let files = write_chain_dir(&out.join(&name), store, r.alpha_format)?;
            outputs.extend(files.into_iter().map(|f| format!("{name}/{f}")));
        }
        Ok(outputs)
    })?;

    let mut manifest = RunManifest::new("fit", r.fit.seed, r)?;
    manifest.inputs = vec![q_path.display().to_string(), y_path.display().to_string()];
    manifest.outputs = outputs;
    manifest.phases = clock.into_phases();
    manifest.write_atomic(out)?;
    Ok(())
}

//! `cdm bench`: wall-clock scaling of the samplers across attribute counts.
//!
//! Timing values are the one deliberately non-reproducible artifact in the
//! tool: re-running a bench manifest re-measures rather than replays.

use std::path::{Path, PathBuf};

use cdm_core::error::{Error, Result};
use cdm_core::samplers::{run_chain, FitConfig, Method, ModelKind};
use cdm_core::simulate::{simulate, AttributeStructure, ItemSpec, QSpec, SimConfig};
use clap::Args;
use serde::{Deserialize, Serialize};

use crate::config::{MethodArg, ModelArg};
use crate::formats::{create_dir, to_json_pretty, write_file};
use crate::manifest::{PhaseClock, RunManifest};

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Attribute counts to benchmark, comma separated.
    #[arg(long = "k-list", value_delimiter = ',', default_value = "3,5,7")]
    pub k_list: Vec<usize>,

    /// Examinees per synthetic dataset.
    #[arg(long, default_value_t = 1000)]
    pub n: usize,

    /// Items per synthetic dataset.
    #[arg(long, default_value_t = 40)]
    pub j: usize,

    /// Attribute-update strategies to time, comma separated.
    #[arg(long, value_enum, value_delimiter = ',', default_value = "sequential,simultaneous")]
    pub methods: Vec<MethodArg>,

    /// Measurement model.
    #[arg(long, value_enum, default_value = "dina")]
    pub model: ModelArg,

    /// MCMC iterations per timed run.
    #[arg(long, env = "CDM_ITERS", default_value_t = 200)]
    pub iters: usize,

    /// Base RNG seed (per-K datasets derive from it).
    #[arg(long, env = "CDM_SEED", default_value_t = 0)]
    pub seed: u64,

    /// Output directory.
    #[arg(long, env = "CDM_OUT", value_name = "DIR")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResolvedBench {
    pub k_list: Vec<usize>,
    pub n: usize,
    pub j: usize,
    pub methods: Vec<Method>,
    pub model: ModelKind,
    pub iterations: usize,
    pub seed: u64,
}

/// One timed run in the output table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchRow {
    pub method: String,
    pub k: usize,
    pub seconds: f64,
    pub per_1000_iters: f64,
    /// Growth ratio relative to the same method at the first K in the list.
    pub ratio_vs_first_k: f64,
}

pub fn run(args: &BenchArgs) -> Result<()> {
    let resolved = ResolvedBench {
        k_list: args.k_list.clone(),
        n: args.n,
        j: args.j,
        methods: args.methods.iter().copied().map(Into::into).collect(),
        model: args.model.into(),
        iterations: args.iters,
        seed: args.seed,
    };
    execute(&resolved, &args.out)
}

pub fn execute(r: &ResolvedBench, out: &Path) -> Result<()> {
    if r.k_list.is_empty() {
        return Err(Error::config("--k-list must name at least one K"));
    }
    if r.methods.is_empty() {
        return Err(Error::config("--methods must name at least one method"));
    }
    if r.iterations == 0 {
        return Err(Error::config("--iters must be at least 1"));
    }
    if r.methods.contains(&Method::Simultaneous) {
        if let Some(&k) = r.k_list.iter().find(|&&k| k > 20) {
            return Err(Error::config(format!(
                "the simultaneous method enumerates 2^K profiles per examinee \
                 and is capped at K = 20, got K = {k}"
            )));
        }
    }

    let mut clock = PhaseClock::new();
    let mut rows: Vec<BenchRow> = Vec::new();
    for &k in &r.k_list {
        let sim = SimConfig {
            n_examinees: r.n,
            n_items: r.j,
            n_attrs: k,
            structure: AttributeStructure::Uniform,
            items: match r.model {
                ModelKind::Dina => ItemSpec::Dina {
                    guess: 0.2,
                    slip: 0.2,
                },
                ModelKind::Gdina => ItemSpec::Gdina,
            },
            q: QSpec::Generated,
            seed: r.seed.wrapping_add(k as u64),
        };
        let data = clock.time(&format!("simulate-k{k}"), || simulate(&sim))?;

        for &method in &r.methods {
            let mut cfg = FitConfig::new(r.model, method, r.seed);
            cfg.iterations = r.iterations;
            cfg.burn_in = r.iterations - 1; // keep one draw: timing only
            cfg.thin = 1;
            cfg.log_every = 0;
            let store = clock.time(&format!("fit-{}-k{k}", method.name()), || {
                run_chain(&data.y, &data.q, &cfg)
            })?;
            let seconds = store.stats.seconds;
            let per_1000 = seconds * 1000.0 / r.iterations as f64;
            let base = rows
                .iter()
                .find(|row| row.method == method.name() && row.k == r.k_list[0])
                .map_or(per_1000, |row| row.per_1000_iters);
            rows.push(BenchRow {
                method: method.name().to_string(),
                k,
                seconds,
                per_1000_iters: per_1000,
                ratio_vs_first_k: per_1000 / base,
            });
            log::info!(
                "{} K={k}: {seconds:.3} s for {} iterations ({per_1000:.3} s / 1000)",
                method.name(),
                r.iterations
            );
        }
    }

    create_dir(out)?;
    let outputs = clock.time("write", || {
        let mut csv = String::from("method,k,seconds,per_1000_iters,ratio_vs_first_k\n");
        for row in &rows {
            csv.push_str(&format!(
                "{},{},{},{},{}\n",
                row.method, row.k, row.seconds, row.per_1000_iters, row.ratio_vs_first_k
            ));
        }
        write_file(&out.join("timing.csv"), &csv)?;
        write_file(&out.join("timing.json"), &to_json_pretty(&rows)?)?;
        Ok(vec!["timing.csv".into(), "timing.json".into()])
    })?;

    let mut manifest = RunManifest::new("bench", r.seed, r)?;
    manifest.outputs = outputs;
    manifest.phases = clock.into_phases();
    manifest.write_atomic(out)?;
    Ok(())
}

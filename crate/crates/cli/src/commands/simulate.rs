//! `cdm simulate`: synthesize a dataset directory from a JSON recipe.

use std::path::{Path, PathBuf};

use cdm_core::error::Result;
use cdm_core::simulate::{simulate, SimConfig};
use clap::Args;

use crate::formats::{
    create_dir, from_json_config, write_alpha_truth_csv, write_params_json, write_pi_csv,
    write_q_csv, write_y_csv,
};
use crate::manifest::{PhaseClock, RunManifest};

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// JSON simulation recipe (field names match the library's SimConfig).
    #[arg(long, value_name = "FILE")]
    pub config: PathBuf,

    /// Override the recipe's RNG seed.
    #[arg(long, env = "CDM_SEED")]
    pub seed: Option<u64>,

    /// Output directory for the dataset (created if missing).
    #[arg(long, env = "CDM_OUT", value_name = "DIR")]
    pub out: PathBuf,
}

pub fn run(args: &SimulateArgs) -> Result<()> {
    let mut cfg: SimConfig = from_json_config(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    execute(&cfg, &[args.config.clone()], &args.out)
}

/// Runs the simulation and writes the dataset directory:
/// `Q.csv`, `Y.csv`, `truth_alpha.csv`, `truth_pi.csv`, `truth_params.json`.
pub fn execute(cfg: &SimConfig, inputs: &[PathBuf], out: &Path) -> Result<()> {
    let mut clock = PhaseClock::new();
    let data = clock.time("simulate", || simulate(cfg))?;

    create_dir(out)?;
    let outputs = clock.time("write", || {
        write_q_csv(&out.join("Q.csv"), &data.q)?;
        write_y_csv(&out.join("Y.csv"), &data.y)?;
        write_alpha_truth_csv(&out.join("truth_alpha.csv"), &data.alpha, cfg.n_attrs)?;
        write_pi_csv(&out.join("truth_pi.csv"), &data.pi)?;
        write_params_json(&out.join("truth_params.json"), &data.params)?;
        Ok(vec![
            "Q.csv".into(),
            "Y.csv".into(),
            "truth_alpha.csv".into(),
            "truth_pi.csv".into(),
            "truth_params.json".into(),
        ])
    })?;

    log::info!(
        "simulated N={} J={} K={} into {}",
        cfg.n_examinees,
        cfg.n_items,
        cfg.n_attrs,
        out.display()
    );

    let mut manifest = RunManifest::new("simulate", cfg.seed, cfg)?;
    manifest.inputs = inputs.iter().map(|p| p.display().to_string()).collect();
    manifest.outputs = outputs;
    manifest.phases = clock.into_phases();
    manifest.write_atomic(out)?;
    Ok(())
}

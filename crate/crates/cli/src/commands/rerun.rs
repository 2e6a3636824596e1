//! `cdm rerun`: replay a previous run from its manifest.
//!
//! The manifest's `config` snapshot is deserialized back into the same
//! resolved configuration the original command executed, so the replay
//! goes through the identical code path and reproduces every output file
//! byte for byte (bench timings excepted — those re-measure).

use std::path::{Path, PathBuf};

use cdm_core::error::{Error, Result};
use cdm_core::simulate::SimConfig;
use clap::Args;
use serde::de::DeserializeOwned;

use crate::commands::{bench, diagnose, evaluate, fit, simulate};
use crate::manifest::RunManifest;

#[derive(Debug, Args)]
pub struct RerunArgs {
    /// manifest.json from a previous run.
    #[arg(long, value_name = "FILE")]
    pub manifest: PathBuf,

    /// Output directory for the reproduced artifacts.
    #[arg(long, env = "CDM_OUT", value_name = "DIR")]
    pub out: PathBuf,
}

fn config_as<T: DeserializeOwned>(m: &RunManifest, path: &Path) -> Result<T> {
    serde_json::from_value(m.config.clone()).map_err(|e| {
        Error::data(format!(
            "{}: config snapshot does not match command {:?}: {e}",
            path.display(),
            m.command
        ))
    })
}

pub fn run(args: &RerunArgs) -> Result<()> {
    let m = RunManifest::read(&args.manifest)?;
    if m.tool != "cdm" {
        return Err(Error::data(format!(
            "{}: written by tool {:?}, not cdm",
            args.manifest.display(),
            m.tool
        )));
    }
    if m.version != env!("CARGO_PKG_VERSION") {
        log::warn!(
            "manifest was written by cdm {}, this is {}; outputs may differ",
            m.version,
            env!("CARGO_PKG_VERSION")
        );
    }
    log::info!("replaying {} run from {}", m.command, args.manifest.display());

    match m.command.as_str() {
        "simulate" => {
            let cfg: SimConfig = config_as(&m, &args.manifest)?;
            simulate::execute(&cfg, &[args.manifest.clone()], &args.out)
        }
        "fit" => execute_from(&m, &args.manifest, &args.out, fit::execute),
        "diagnose" => execute_from(&m, &args.manifest, &args.out, diagnose::execute),
        "evaluate" => execute_from(&m, &args.manifest, &args.out, evaluate::execute),
        "bench" => execute_from(&m, &args.manifest, &args.out, bench::execute),
        other => Err(Error::data(format!(
            "{}: unknown command {other:?}",
            args.manifest.display()
        ))),
    }
}

fn execute_from<T: DeserializeOwned>(
    m: &RunManifest,
    manifest_path: &Path,
    out: &Path,
    execute: fn(&T, &Path) -> Result<()>,
) -> Result<()> {
    let resolved: T = config_as(m, manifest_path)?;
    execute(&resolved, out)
}

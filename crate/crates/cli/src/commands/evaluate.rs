//! `cdm evaluate`: parameter-recovery metrics for fitted chains against
//! the simulation truth they were fitted to.

use std::path::{Path, PathBuf};

use cdm_core::error::{Error, Result};
use cdm_core::eval::{point_estimates, recovery_metrics, Replication};
use cdm_core::model::{dina_as_gdina, ItemParams};
use cdm_core::samplers::{ChainStore, ModelKind};
use clap::Args;
use serde::{Deserialize, Serialize};

use crate::formats::{
    create_dir, read_alpha_truth_csv, read_chain_dir, read_params_json, read_pi_csv,
    to_json_pretty, write_file,
};
use crate::manifest::{PhaseClock, RunManifest};

/// One replication: a fitted chain directory and the dataset directory
/// holding the generating truth.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairSpec {
    pub chain: PathBuf,
    pub truth: PathBuf,
}

fn parse_pair(s: &str) -> std::result::Result<PairSpec, String> {
    match s.split_once(',') {
        Some((chain, truth)) if !chain.is_empty() && !truth.is_empty() => Ok(PairSpec {
            chain: PathBuf::from(chain),
            truth: PathBuf::from(truth),
        }),
        _ => Err(format!("expected CHAIN_DIR,TRUTH_DIR, got {s:?}")),
    }
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Chain/truth directory pair "CHAIN_DIR,TRUTH_DIR"; repeat per
    /// replication.
    #[arg(long, value_parser = parse_pair, required = true)]
    pub pair: Vec<PairSpec>,

    /// Largest n for the up-to-n-miss profile agreement rates.
    #[arg(long, default_value_t = 2)]
    pub par_max: usize,

    /// Output directory.
    #[arg(long, env = "CDM_OUT", value_name = "DIR")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResolvedEvaluate {
    pub pairs: Vec<PairSpec>,
    pub par_max: usize,
}

pub fn run(args: &EvaluateArgs) -> Result<()> {
    let resolved = ResolvedEvaluate {
        pairs: args.pair.clone(),
        par_max: args.par_max,
    };
    execute(&resolved, &args.out)
}

/// Flattens the truth item parameters into the chain's parameter layout
/// order. A saturated-model chain can be scored against conjunctive truth
/// via the exact coefficient conversion; the reverse has no counterpart.
fn flatten_item_truth(store: &ChainStore, truth: &ItemParams) -> Result<Vec<f64>> {
    let layout = &store.layout;
    if truth.n_items() != layout.n_items {
        return Err(Error::data(format!(
            "truth has {} items but the chain was fitted to {}",
            truth.n_items(),
            layout.n_items
        )));
    }
    match (store.model, truth) {
        (ModelKind::Dina, ItemParams::Dina(p)) => {
            Ok(p.guess.iter().chain(&p.slip).copied().collect())
        }
        (ModelKind::Gdina, ItemParams::Gdina(v)) => {
            let mut flat = Vec::new();
            for (f, item) in layout.families.iter().zip(v) {
                if item.coef.len() != f.len {
                    return Err(Error::data(format!(
                        "truth for {} has {} coefficients but the chain stores {}",
                        f.name,
                        item.coef.len(),
                        f.len
                    )));
                }
                flat.extend_from_slice(&item.coef);
            }
            Ok(flat)
        }
        (ModelKind::Gdina, ItemParams::Dina(p)) => {
            let mut flat = Vec::new();
            for (j, f) in layout.families.iter().enumerate() {
                // Only the item's attribute count matters for the
                // conversion; recover it from the family width 2^w.
                let w = f.len.trailing_zeros();
                let mask = (1u32 << w) - 1;
                flat.extend(dina_as_gdina(mask, p.guess[j], p.slip[j])?.coef);
            }
            Ok(flat)
        }
        (ModelKind::Dina, ItemParams::Gdina(_)) => Err(Error::data(
            "cannot score a conjunctive-model chain against saturated-model truth",
        )),
    }
}

fn load_replication(pair: &PairSpec) -> Result<(Replication, ChainStore)> {
    let store = read_chain_dir(&pair.chain)?;
    let est = point_estimates(&store)?;

    let params = read_params_json(&pair.truth.join("truth_params.json"))?;
    let pi_truth = read_pi_csv(&pair.truth.join("truth_pi.csv"))?;
    let (alpha_truth, k) = read_alpha_truth_csv(&pair.truth.join("truth_alpha.csv"))?;

    let layout = &store.layout;
    if pi_truth.len() != layout.n_classes {
        return Err(Error::data(format!(
            "truth_pi.csv has {} classes but the chain has {}",
            pi_truth.len(),
            layout.n_classes
        )));
    }
    if k != layout.n_attrs || alpha_truth.len() != layout.n_examinees {
        return Err(Error::data(format!(
            "truth_alpha.csv is {}x{} but the chain was fitted to {}x{}",
            alpha_truth.len(),
            k,
            layout.n_examinees,
            layout.n_attrs
        )));
    }
    let item_truth = flatten_item_truth(&store, &params)?;

    let rep = Replication {
        item_est: est.item_means,
        item_truth,
        pi_est: est.pi_mean,
        pi_truth,
        alpha_est: est.alpha_map,
        alpha_truth,
    };
    Ok((rep, store))
}

pub fn execute(r: &ResolvedEvaluate, out: &Path) -> Result<()> {
    let mut clock = PhaseClock::new();

    let (reps, first_store) = clock.time("load", || {
        let mut reps = Vec::with_capacity(r.pairs.len());
        let mut first = None;
        for pair in &r.pairs {
            let (rep, store) = load_replication(pair)?;
            reps.push(rep);
            first.get_or_insert(store);
        }
        let first = first.ok_or_else(|| Error::config("need at least one --pair"))?;
        Ok((reps, first))
    })?;

    let report = clock.time("evaluate", || {
        recovery_metrics(
            &reps,
            &first_store.layout.families,
            first_store.layout.n_attrs,
            r.par_max,
        )
    })?;

    log::info!(
        "recovery over {} replication(s): AAR {:.4}, PAR0 {:.4}, MN_pi {:.5}",
        report.replications,
        report.aar,
        report.par[0],
        report.mn_pi
    );

    create_dir(out)?;
    let outputs = clock.time("write", || {
        write_file(&out.join("recovery.json"), &to_json_pretty(&report)?)?;

        let mut fam = String::from("family,bias,rmse,mse\n");
        for f in &report.families {
            fam.push_str(&format!("{},{},{},{}\n", f.name, f.bias, f.rmse, f.mse));
        }
        write_file(&out.join("recovery_families.csv"), &fam)?;

        let mut rates = String::from("metric,value\n");
        rates.push_str(&format!("mn_pi,{}\n", report.mn_pi));
        rates.push_str(&format!("aar,{}\n", report.aar));
        for (n, v) in report.par.iter().enumerate() {
            rates.push_str(&format!("par{n},{v}\n"));
        }
        write_file(&out.join("recovery_rates.csv"), &rates)?;
        Ok(vec![
            "recovery.json".into(),
            "recovery_families.csv".into(),
            "recovery_rates.csv".into(),
        ])
    })?;

    let mut manifest = RunManifest::new("evaluate", 0, r)?;
    manifest.inputs = r
        .pairs
        .iter()
        .flat_map(|p| [p.chain.display().to_string(), p.truth.display().to_string()])
        .collect();
    manifest.outputs = outputs;
    manifest.phases = clock.into_phases();
    manifest.write_atomic(out)?;
    Ok(())
}

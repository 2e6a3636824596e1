//! `cdm diagnose`: potential-scale-reduction diagnostics across chains.

use std::path::{Path, PathBuf};

use cdm_core::error::Result;
use cdm_core::eval::{psrf, psrf_trace};
use cdm_core::samplers::ChainStore;
use clap::Args;
use serde::{Deserialize, Serialize};

use crate::formats::{create_dir, read_chain_dir, to_json_pretty, write_file};
use crate::manifest::{PhaseClock, RunManifest};

#[derive(Debug, Args)]
pub struct DiagnoseArgs {
    /// Chain directories (at least two compatible chains).
    #[arg(value_name = "CHAIN_DIR", num_args = 1.., required = true)]
    pub chains: Vec<PathBuf>,

    /// Number of prefix lengths in the max-PSRF trace.
    #[arg(long, default_value_t = 20)]
    pub trace_points: usize,

    /// Output directory.
    #[arg(long, env = "CDM_OUT", value_name = "DIR")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResolvedDiagnose {
    pub chains: Vec<PathBuf>,
    pub trace_points: usize,
}

pub fn run(args: &DiagnoseArgs) -> Result<()> {
    let resolved = ResolvedDiagnose {
        chains: args.chains.clone(),
        trace_points: args.trace_points,
    };
    execute(&resolved, &args.out)
}

/// Evenly spaced prefix lengths from 4 to `n_kept`, at most `points` of
/// them, always ending at `n_kept`. (For `n_kept < 4` there is no valid
/// prefix; the single out-of-range entry lets the trace computation report
/// that.)
fn trace_grid(n_kept: usize, points: usize) -> Vec<usize> {
    if n_kept <= 4 {
        return vec![n_kept];
    }
    let points = points.max(1);
    let mut grid = Vec::with_capacity(points);
    for i in 0..points {
        let frac = (i + 1) as f64 / points as f64;
        let l = 4.0 + (n_kept - 4) as f64 * frac;
        let l = (l.round() as usize).clamp(4, n_kept);
        if grid.last() != Some(&l) {
            grid.push(l);
        }
    }
    grid
}

pub fn execute(r: &ResolvedDiagnose, out: &Path) -> Result<()> {
    let mut clock = PhaseClock::new();
    let stores: Vec<ChainStore> = clock.time("load", || {
        r.chains.iter().map(|d| read_chain_dir(d)).collect()
    })?;
    let refs: Vec<&ChainStore> = stores.iter().collect();

    let (report, trace) = clock.time("diagnose", || {
        let report = psrf(&refs)?;
        let grid = trace_grid(report.n_draws, r.trace_points);
        let trace = psrf_trace(&refs, &grid)?;
        Ok((report, trace))
    })?;

    log::info!(
        "max PSRF {:.4} across {} parameters from {} chains x {} draws",
        report.max,
        report.labels.len(),
        report.n_chains,
        report.n_draws
    );

    create_dir(out)?;
    let outputs = clock.time("write", || {
        write_file(&out.join("psrf.json"), &to_json_pretty(&report)?)?;

        let mut csv = String::from("parameter,psrf\n");
        for (label, value) in report.labels.iter().zip(&report.values) {
            csv.push_str(&format!("{label},{value}\n"));
        }
        write_file(&out.join("psrf.csv"), &csv)?;

        let mut tr = String::from("prefix,max_psrf\n");
        for p in &trace {
            tr.push_str(&format!("{},{}\n", p.prefix, p.max_psrf));
        }
        write_file(&out.join("psrf_trace.csv"), &tr)?;
        Ok(vec![
            "psrf.json".into(),
            "psrf.csv".into(),
            "psrf_trace.csv".into(),
        ])
    })?;

    let mut manifest = RunManifest::new("diagnose", 0, r)?;
    manifest.inputs = r.chains.iter().map(|p| p.display().to_string()).collect();
    manifest.outputs = outputs;
    manifest.phases = clock.into_phases();
    manifest.write_atomic(out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::trace_grid;

    #[test]
    fn grid_is_increasing_and_ends_at_n_kept() {
        for (n_kept, points) in [(4, 20), (5, 3), (100, 20), (2000, 20), (37, 100)] {
            let g = trace_grid(n_kept, points);
            assert!(!g.is_empty());
            assert!(g.windows(2).all(|w| w[0] < w[1]), "{g:?}");
            assert_eq!(*g.last().unwrap(), n_kept);
            assert!(*g.first().unwrap() >= 4);
            assert!(g.len() <= points.max(1));
        }
    }
}

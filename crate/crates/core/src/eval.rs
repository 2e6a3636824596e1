//! Point estimation from chains, recovery metrics, and convergence
//! diagnostics.
//!
//! Point estimates are posterior means of the retained draws; attribute
//! profiles are estimated by thresholding the posterior mastery marginal at
//! 0.5 (ties round up to mastery — documented, deterministic).
//!
//! Recovery metrics average over parameters within a family and over
//! replications: with `d_{h}^{(r)} = φ̂_h^{(r)} − φ_h^{(r)}`,
//!
//! ```text
//! Bias̄ = (1/H) Σ_h (1/R) Σ_r d_h^{(r)}
//! RMSĒ = (1/H) Σ_h √( (1/R) Σ_r (d_h^{(r)})² )
//! MSĒ  = (1/H) Σ_h (1/R) Σ_r (d_h^{(r)})²
//! ```
//!
//! plus the average maximum norm `MN̄_π = (1/R) Σ_r max_c |π_c − π̂_c^{(r)}|`
//! for the class distribution, the attribute-wise agreement rate `AAR`,
//! and the profile-wise agreement rates `PARn` (fraction of examinees with
//! at most `n` misestimated attributes).
//!
//! Convergence is summarized by the potential scale reduction factor:
//! with `m` chains of `n` draws, within-variance `W` (mean of the
//! per-chain sample variances) and between-variance `B` (`n` times the
//! sample variance of the chain means),
//!
//! ```text
//! R̂ = ( (n−1)/n · W + B/n ) / W,           reported as R̂^{1/2}
//! ```
//!
//! so identical chains give the numerical floor `√((n−1)/n)` slightly
//! below 1, and chains stuck at distinct constants give `+∞`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::samplers::{ChainStore, FamilySlice};

/// Posterior summaries of one chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointEstimates {
    /// Mean of each flattened item parameter across retained draws.
    pub item_means: Vec<f64>,
    /// Mean of each class probability across retained draws.
    pub pi_mean: Vec<f64>,
    /// Posterior mastery marginal per examinee and attribute, `N × K`
    /// row-major.
    pub alpha_marginals: Vec<f64>,
    /// Profile estimates: bit `k` of examinee `i` is set iff the marginal
    /// is ≥ 0.5 (ties → mastery).
    pub alpha_map: Vec<u32>,
}

/// Posterior means and marginal-MAP attribute profiles from retained draws.
pub fn point_estimates(chain: &ChainStore) -> Result<PointEstimates> {
    let t_total = chain.n_kept();
    if t_total == 0 {
        return Err(Error::data("chain has no retained draws"));
    }
    let scale = 1.0 / t_total as f64;
    let n_item = chain.layout.n_item_params();
    let mut item_means = vec![0.0; n_item];
    let mut pi_mean = vec![0.0; chain.layout.n_classes];
    let n = chain.layout.n_examinees;
    let k = chain.layout.n_attrs;
    let mut alpha_marginals = vec![0.0; n * k];
    for t in 0..t_total {
        for (acc, v) in item_means.iter_mut().zip(chain.item_row(t)) {
            *acc += v * scale;
        }
        for (acc, v) in pi_mean.iter_mut().zip(chain.pi_row(t)) {
            *acc += v * scale;
        }
        for (i, &mask) in chain.alpha_row(t).iter().enumerate() {
            for kk in 0..k {
                alpha_marginals[i * k + kk] += f64::from(mask >> kk & 1) * scale;
            }
        }
    }
    let alpha_map = (0..n)
        .map(|i| {
            (0..k)
                .filter(|&kk| alpha_marginals[i * k + kk] >= 0.5)
                .fold(0u32, |m, kk| m | 1 << kk)
        })
        .collect();
    Ok(PointEstimates {
        item_means,
        pi_mean,
        alpha_marginals,
        alpha_map,
    })
}

/// Estimates and ground truth for one simulation replication.
///
/// Truth is carried per replication: attribute profiles regenerate with
/// every data set, and item parameters or class probabilities may too
/// (under a fixed design they are simply repeated).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Replication {
    /// Estimated flattened item parameters.
    pub item_est: Vec<f64>,
    /// True flattened item parameters, same layout.
    pub item_truth: Vec<f64>,
    /// Estimated class distribution.
    pub pi_est: Vec<f64>,
    /// True class distribution.
    pub pi_truth: Vec<f64>,
    /// Estimated attribute profiles (bitmasks).
    pub alpha_est: Vec<u32>,
    /// True attribute profiles (bitmasks).
    pub alpha_truth: Vec<u32>,
}

/// Averaged Bias/RMSE/MSE of one parameter family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyRecovery {
    /// Family name (`"guess"`, `"slip"`, `"lambda"`, `"pi"`).
    pub name: String,
    /// Mean over parameters of the mean-over-replications error.
    pub bias: f64,
    /// Mean over parameters of the root-mean-square error.
    pub rmse: f64,
    /// Mean over parameters of the mean-square error.
    pub mse: f64,
}

/// Full recovery summary over `R` replications.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryReport {
    /// Item-parameter families followed by the `"pi"` family.
    pub families: Vec<FamilyRecovery>,
    /// Average maximum norm of the class-distribution error.
    pub mn_pi: f64,
    /// Attribute-wise agreement rate.
    pub aar: f64,
    /// `par[n]` = fraction of (replication, examinee) pairs with at most
    /// `n` misestimated attributes, for `n = 0..=par_max`.
    pub par: Vec<f64>,
    /// Number of replications `R`.
    pub replications: usize,
}

fn family_recovery(name: &str, reps: &[Replication], start: usize, len: usize) -> FamilyRecovery {
    let r = reps.len() as f64;
    let (mut bias, mut rmse, mut mse) = (0.0, 0.0, 0.0);
    for h in start..start + len {
        let (mut sum_d, mut sum_d2) = (0.0, 0.0);
        for rep in reps {
            let d = if name == "pi" {
                rep.pi_est[h] - rep.pi_truth[h]
            } else {
                rep.item_est[h] - rep.item_truth[h]
            };
            sum_d += d;
            sum_d2 += d * d;
        }
        bias += sum_d / r;
        rmse += (sum_d2 / r).sqrt();
        mse += sum_d2 / r;
    }
    let hf = len as f64;
    FamilyRecovery {
        name: name.to_string(),
        bias: bias / hf,
        rmse: rmse / hf,
        mse: mse / hf,
    }
}

/// Computes the full recovery summary.
///
/// `families` names contiguous blocks of the flattened item-parameter
/// vector (take them from [`crate::samplers::ParamLayout::families`]); the
/// class distribution is always reported as an additional `"pi"` family.
/// `par` covers `n = 0..=par_max`.
pub fn recovery_metrics(
    reps: &[Replication],
    families: &[FamilySlice],
    n_attrs: usize,
    par_max: usize,
) -> Result<RecoveryReport> {
    if reps.is_empty() {
        return Err(Error::config("need at least one replication"));
    }
    if n_attrs == 0 || n_attrs > 31 {
        return Err(Error::config(format!(
            "attribute count must lie in 1..=31, got {n_attrs}"
        )));
    }
    let w = reps[0].item_est.len();
    let c = reps[0].pi_est.len();
    let n = reps[0].alpha_est.len();
    if n == 0 {
        return Err(Error::config("need at least one examinee"));
    }
    for (r, rep) in reps.iter().enumerate() {
        if rep.item_est.len() != w
            || rep.item_truth.len() != w
            || rep.pi_est.len() != c
            || rep.pi_truth.len() != c
            || rep.alpha_est.len() != n
            || rep.alpha_truth.len() != n
        {
            return Err(Error::config(format!(
                "replication {} has mismatched shapes (items {}/{}, π {}/{}, \
                 profiles {}/{}; expected {w}, {c}, {n})",
                r + 1,
                rep.item_est.len(),
                rep.item_truth.len(),
                rep.pi_est.len(),
                rep.pi_truth.len(),
                rep.alpha_est.len(),
                rep.alpha_truth.len()
            )));
        }
    }
    for f in families {
        if f.start + f.len > w {
            return Err(Error::config(format!(
                "family {:?} covers {}..{} but there are only {w} item parameters",
                f.name,
                f.start,
                f.start + f.len
            )));
        }
    }

    let mut out: Vec<FamilyRecovery> = families
        .iter()
        .map(|f| family_recovery(&f.name, reps, f.start, f.len))
        .collect();
    out.push(family_recovery("pi", reps, 0, c));

    let r = reps.len() as f64;
    let mn_pi = reps
        .iter()
        .map(|rep| {
            rep.pi_est
                .iter()
                .zip(&rep.pi_truth)
                .map(|(e, t)| (e - t).abs())
                .fold(0.0f64, f64::max)
        })
        .sum::<f64>()
        / r;

    let attr_mask = (1u32 << n_attrs) - 1;
    let mut agree = 0u64;
    let mut within = vec![0u64; par_max + 1];
    for rep in reps {
        for (&est, &truth) in rep.alpha_est.iter().zip(&rep.alpha_truth) {
            let wrong = ((est ^ truth) & attr_mask).count_ones() as usize;
            agree += (n_attrs - wrong) as u64;
            for (nn, slot) in within.iter_mut().enumerate() {
                *slot += u64::from(wrong <= nn);
            }
        }
    }
    let denom = r * n as f64;
    Ok(RecoveryReport {
        families: out,
        mn_pi,
        aar: agree as f64 / (denom * n_attrs as f64),
        par: within.iter().map(|&c| c as f64 / denom).collect(),
        replications: reps.len(),
    })
}

/// Per-parameter potential scale reduction factors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsrfReport {
    /// Parameter labels: item parameters, then `π` entries.
    pub labels: Vec<String>,
    /// `R̂^{1/2}` per parameter, aligned with `labels`.
    pub values: Vec<f64>,
    /// Largest `R̂^{1/2}` over all parameters.
    pub max: f64,
    /// Number of chains `m`.
    pub n_chains: usize,
    /// Retained draws per chain `n`.
    pub n_draws: usize,
}

/// One point of a convergence trace: the largest `R̂^{1/2}` when only the
/// first `prefix` retained draws of every chain are considered (with the
/// first half of the prefix discarded as additional burn-in).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsrfTracePoint {
    /// Prefix length (retained draws considered).
    pub prefix: usize,
    /// Largest `R̂^{1/2}` over all item and population parameters.
    pub max_psrf: f64,
}

/// `R̂^{1/2}` for one scalar parameter across parallel chains.
///
/// All chains must have the same length `n ≥ 2`; at least two chains are
/// required.  Degenerate cases follow the formula: all chains identical and
/// constant gives `√((n−1)/n)`; chains constant at different levels give
/// `+∞` (zero within-chain variance, positive between-chain variance).
pub fn psrf_scalar(chains: &[&[f64]]) -> Result<f64> {
    let m = chains.len();
    if m < 2 {
        return Err(Error::config(format!(
            "the diagnostic needs at least two chains, got {m}"
        )));
    }
    let n = chains[0].len();
    if n < 2 {
        return Err(Error::config(format!(
            "each chain needs at least two draws, got {n}"
        )));
    }
    if chains.iter().any(|ch| ch.len() != n) {
        return Err(Error::config("chains have unequal lengths"));
    }
    let nf = n as f64;
    let means: Vec<f64> = chains
        .iter()
        .map(|ch| ch.iter().sum::<f64>() / nf)
        .collect();
    let w = chains
        .iter()
        .zip(&means)
        .map(|(ch, &mu)| ch.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / (nf - 1.0))
        .sum::<f64>()
        / m as f64;
    let grand = means.iter().sum::<f64>() / m as f64;
    let b = nf * means.iter().map(|mu| (mu - grand) * (mu - grand)).sum::<f64>()
        / (m as f64 - 1.0);
    let var_plus = (nf - 1.0) / nf * w + b / nf;
    if w == 0.0 {
        // Both variances zero: the formula's limit is (n−1)/n.
        if b == 0.0 {
            return Ok(((nf - 1.0) / nf).sqrt());
        }
        return Ok(f64::INFINITY);
    }
    Ok((var_plus / w).sqrt())
}

fn check_psrf_chains(chains: &[&ChainStore]) -> Result<usize> {
    if chains.len() < 2 {
        return Err(Error::config(format!(
            "the diagnostic needs at least two chains, got {}",
            chains.len()
        )));
    }
    let layout = &chains[0].layout;
    for ch in &chains[1..] {
        if ch.layout != *layout {
            return Err(Error::config(
                "chains record different parameter layouts and cannot be compared",
            ));
        }
    }
    let n = chains[0].n_kept();
    if chains.iter().any(|ch| ch.n_kept() != n) {
        return Err(Error::config("chains retained different numbers of draws"));
    }
    if n < 10 {
        return Err(Error::config(format!(
            "need at least 10 retained draws per chain, got {n}"
        )));
    }
    Ok(n)
}

/// Labels for everything [`psrf`] diagnoses: item parameters then `π`.
fn diag_labels(chains: &[&ChainStore]) -> Vec<String> {
    let layout = &chains[0].layout;
    let mut labels = layout.item_labels.clone();
    labels.extend(layout.pi_labels());
    labels
}

/// The series of diagnosed parameter `p` (item parameters first, then `π`
/// entries) from one chain.
fn diag_series(chain: &ChainStore, p: usize) -> Vec<f64> {
    let n_item = chain.layout.n_item_params();
    if p < n_item {
        chain.item_series(p)
    } else {
        chain.pi_series(p - n_item)
    }
}

/// Potential scale reduction factors for all item and population
/// parameters of parallel chains.
///
/// Attribute draws are deliberately excluded: the diagnostic targets the
/// continuous parameters.  Requires ≥ 2 chains with identical layouts and
/// equal retained lengths ≥ 10.
pub fn psrf(chains: &[&ChainStore]) -> Result<PsrfReport> {
    let n = check_psrf_chains(chains)?;
    let labels = diag_labels(chains);
    let mut values = Vec::with_capacity(labels.len());
    for p in 0..labels.len() {
        let series: Vec<Vec<f64>> = chains.iter().map(|ch| diag_series(ch, p)).collect();
        let refs: Vec<&[f64]> = series.iter().map(Vec::as_slice).collect();
        values.push(psrf_scalar(&refs)?);
    }
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(PsrfReport {
        labels,
        values,
        max,
        n_chains: chains.len(),
        n_draws: n,
    })
}

/// Convergence trace: for each prefix length `L`, the largest `R̂^{1/2}`
/// over all item and population parameters when chains are truncated to
/// their first `L` retained draws and the first `⌊L/2⌋` of those are
/// discarded.
///
/// Prefix lengths must be ≥ 4 (so at least two draws survive the halving)
/// and at most the retained length.
pub fn psrf_trace(chains: &[&ChainStore], prefix_lengths: &[usize]) -> Result<Vec<PsrfTracePoint>> {
    let n = check_psrf_chains(chains)?;
    if prefix_lengths.is_empty() {
        return Err(Error::config("need at least one prefix length"));
    }
    for &l in prefix_lengths {
        if l < 4 || l > n {
            return Err(Error::config(format!(
                "prefix length {l} outside the valid range 4..={n}"
            )));
        }
    }
    let n_params = diag_labels(chains).len();
    let mut maxima = vec![f64::NEG_INFINITY; prefix_lengths.len()];
    for p in 0..n_params {
        let series: Vec<Vec<f64>> = chains.iter().map(|ch| diag_series(ch, p)).collect();
        for (slot, &l) in maxima.iter_mut().zip(prefix_lengths) {
            let window: Vec<&[f64]> = series.iter().map(|s| &s[l / 2..l]).collect();
            let value = psrf_scalar(&window)?;
            if value > *slot {
                *slot = value;
            }
        }
    }
    Ok(prefix_lengths
        .iter()
        .zip(maxima)
        .map(|(&prefix, max_psrf)| PsrfTracePoint { prefix, max_psrf })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::rng::RngStream;
    use crate::samplers::{Method, ModelKind, ParamLayout};
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn store_with(draws: &[(&[f64], &[f64], &[u32])]) -> ChainStore {
        let (items, pi, alpha) = draws[0];
        let n_items = items.len() / 2;
        let k = pi.len().trailing_zeros() as usize;
        let layout = ParamLayout::dina(alpha.len(), n_items, k);
        let mut store = ChainStore::with_capacity(
            ModelKind::Dina,
            Method::Sequential,
            layout,
            draws.len(),
        );
        for (t, (items, pi, alpha)) in draws.iter().enumerate() {
            store.push_iteration(t + 1, items, pi, alpha).unwrap();
        }
        store
    }

    #[test]
    fn constant_chain_estimates_equal_the_constant() {
        let draw: (&[f64], &[f64], &[u32]) = (&[0.2, 0.1], &[0.25, 0.75], &[0b1, 0b0]);
        let store = store_with(&[draw, draw, draw]);
        let est = point_estimates(&store).unwrap();
        assert_eq!(est.item_means, vec![0.2, 0.1]);
        assert_eq!(est.pi_mean, vec![0.25, 0.75]);
        assert_eq!(est.alpha_marginals, vec![1.0, 0.0]);
        assert_eq!(est.alpha_map, vec![0b1, 0b0]);
    }

    #[test]
    fn two_draw_chain_estimates_are_midpoints() {
        let store = store_with(&[
            (&[0.1, 0.3], &[0.4, 0.6], &[0b1]),
            (&[0.2, 0.1], &[0.6, 0.4], &[0b0]),
        ]);
        let est = point_estimates(&store).unwrap();
        assert_eq!(est.item_means, vec![(0.1 + 0.2) / 2.0, (0.3 + 0.1) / 2.0]);
        assert_eq!(est.pi_mean, vec![0.5, 0.5]);
        // Marginal exactly 0.5 → tie resolves to mastery.
        assert_eq!(est.alpha_marginals, vec![0.5]);
        assert_eq!(est.alpha_map, vec![0b1]);
    }

    #[test]
    fn empty_chain_is_rejected() {
        let layout = ParamLayout::dina(1, 1, 1);
        let store = ChainStore::with_capacity(ModelKind::Dina, Method::Sequential, layout, 0);
        assert!(point_estimates(&store).is_err());
    }

    /// The two-replication hand case: every number checked against an
    /// independent spreadsheet-style evaluation of the formulas.
    fn hand_case() -> Vec<Replication> {
        let item_truth = vec![0.2, 0.3, 0.1, 0.2]; // g1 g2 s1 s2
        let pi_truth = vec![0.4, 0.3, 0.2, 0.1];
        vec![
            Replication {
                item_est: vec![0.25, 0.28, 0.12, 0.18],
                item_truth: item_truth.clone(),
                pi_est: vec![0.35, 0.32, 0.22, 0.11],
                pi_truth: pi_truth.clone(),
                alpha_est: vec![0b00, 0b11, 0b11],
                alpha_truth: vec![0b00, 0b01, 0b11],
            },
            Replication {
                item_est: vec![0.15, 0.35, 0.08, 0.25],
                item_truth,
                pi_est: vec![0.45, 0.28, 0.17, 0.10],
                pi_truth,
                alpha_est: vec![0b11, 0b11, 0b00],
                alpha_truth: vec![0b10, 0b11, 0b00],
            },
        ]
    }

    fn dina_families(n_items: usize) -> Vec<FamilySlice> {
        ParamLayout::dina(1, n_items, 2).families
    }

    #[test]
    fn recovery_metrics_match_the_hand_computation() {
        let report = recovery_metrics(&hand_case(), &dina_families(2), 2, 2).unwrap();
        assert_eq!(report.replications, 2);
        let by_name = |n: &str| report.families.iter().find(|f| f.name == n).unwrap();

        let guess = by_name("guess");
        assert_relative_eq!(guess.bias, 0.0075, max_relative = 1e-12);
        assert_relative_eq!(guess.rmse, 0.04403943276465976, max_relative = 1e-12);
        assert_relative_eq!(guess.mse, 0.001975, max_relative = 1e-12);

        let slip = by_name("slip");
        assert_relative_eq!(slip.bias, 0.0075, max_relative = 1e-12);
        assert_relative_eq!(slip.rmse, 0.029039432764659767, max_relative = 1e-12);

        let pi = by_name("pi");
        assert_abs_diff_eq!(pi.bias, 0.0, epsilon = 1e-15);
        assert_relative_eq!(pi.rmse, 0.02564154134495735, max_relative = 1e-12);

        assert_relative_eq!(report.mn_pi, 0.05, max_relative = 1e-12);
        assert_relative_eq!(report.aar, 5.0 / 6.0, max_relative = 1e-12);
        assert_relative_eq!(report.par[0], 2.0 / 3.0, max_relative = 1e-12);
        assert_relative_eq!(report.par[1], 1.0, max_relative = 1e-12);
        assert_relative_eq!(report.par[2], 1.0, max_relative = 1e-12);
    }

    #[test]
    fn perfect_recovery_scores_zeros_and_ones() {
        let rep = Replication {
            item_est: vec![0.2, 0.3, 0.1, 0.2],
            item_truth: vec![0.2, 0.3, 0.1, 0.2],
            pi_est: vec![0.25; 4],
            pi_truth: vec![0.25; 4],
            alpha_est: vec![0b01, 0b10],
            alpha_truth: vec![0b01, 0b10],
        };
        let report = recovery_metrics(&[rep], &dina_families(2), 2, 2).unwrap();
        for fam in &report.families {
            assert_eq!((fam.bias, fam.rmse, fam.mse), (0.0, 0.0, 0.0), "{}", fam.name);
        }
        assert_eq!(report.mn_pi, 0.0);
        assert_eq!(report.aar, 1.0);
        assert!(report.par.iter().all(|&p| p == 1.0));
    }

    #[test]
    fn one_wrong_attribute_out_of_three() {
        let rep = Replication {
            item_est: vec![],
            item_truth: vec![],
            pi_est: vec![0.125; 8],
            pi_truth: vec![0.125; 8],
            alpha_est: vec![0b110],
            alpha_truth: vec![0b111],
        };
        let report = recovery_metrics(&[rep], &[], 3, 3).unwrap();
        assert_relative_eq!(report.aar, 2.0 / 3.0, max_relative = 1e-12);
        assert_eq!(report.par[0], 0.0);
        assert_eq!(report.par[1], 1.0);
        // PARn is monotone and PAR_K = 1.
        for w in report.par.windows(2) {
            assert!(w[0] <= w[1]);
        }
        assert_eq!(report.par[3], 1.0);
    }

    #[test]
    fn recovery_is_invariant_under_index_permutations() {
        let base = recovery_metrics(&hand_case(), &dina_families(2), 2, 2).unwrap();
        // Reverse parameter order inside each family, π entries, and
        // examinees — in estimates and truths simultaneously.
        let permuted: Vec<Replication> = hand_case()
            .into_iter()
            .map(|mut rep| {
                rep.item_est.swap(0, 1);
                rep.item_est.swap(2, 3);
                rep.item_truth.swap(0, 1);
                rep.item_truth.swap(2, 3);
                rep.pi_est.reverse();
                rep.pi_truth.reverse();
                rep.alpha_est.reverse();
                rep.alpha_truth.reverse();
                rep
            })
            .collect();
        let perm = recovery_metrics(&permuted, &dina_families(2), 2, 2).unwrap();
        for (a, b) in base.families.iter().zip(&perm.families) {
            assert_relative_eq!(a.bias, b.bias, max_relative = 1e-12);
            assert_relative_eq!(a.rmse, b.rmse, max_relative = 1e-12);
            assert_relative_eq!(a.mse, b.mse, max_relative = 1e-12);
        }
        assert_eq!(base.mn_pi, perm.mn_pi);
        assert_eq!(base.aar, perm.aar);
        assert_eq!(base.par, perm.par);
    }

    #[test]
    fn recovery_rejects_mismatched_shapes() {
        let mut reps = hand_case();
        reps[1].pi_est.pop();
        assert!(recovery_metrics(&reps, &dina_families(2), 2, 2).is_err());
        let bad_family = vec![FamilySlice {
            name: "guess".into(),
            start: 3,
            len: 4,
        }];
        assert!(recovery_metrics(&hand_case(), &bad_family, 2, 2).is_err());
        assert!(recovery_metrics(&[], &dina_families(2), 2, 2).is_err());
    }

    #[test]
    fn psrf_matches_the_hand_case() {
        // Chains {1,2,3,4} and {2,3,4,7}: W = 19/6, B = 9/2,
        // var⁺ = (3/4)(19/6) + (9/2)/4 = 7/2, R̂ = 21/19.
        let a = [1.0, 2.0, 3.0, 4.0];
        let b = [2.0, 3.0, 4.0, 7.0];
        let r = psrf_scalar(&[&a, &b]).unwrap();
        assert_relative_eq!(r, (21.0f64 / 19.0).sqrt(), max_relative = 1e-14);
        assert_relative_eq!(r, 1.0513149660756935, max_relative = 1e-14);
    }

    #[test]
    fn identical_chains_hit_the_numerical_floor() {
        let a = [0.4, 0.6, 0.5, 0.7, 0.4, 0.6, 0.5, 0.7, 0.4, 0.6];
        let r = psrf_scalar(&[&a, &a, &a]).unwrap();
        // Identical chains: B = 0, so R̂ = (n−1)/n.
        assert_relative_eq!(r, (9.0f64 / 10.0).sqrt(), max_relative = 1e-14);
        assert!(r < 1.0);
        let c = [0.5; 12];
        let r = psrf_scalar(&[&c, &c]).unwrap();
        assert_relative_eq!(r, (11.0f64 / 12.0).sqrt(), max_relative = 1e-14);
    }

    #[test]
    fn disjoint_constant_chains_diverge() {
        let a = [0.0; 10];
        let b = [1.0; 10];
        let r = psrf_scalar(&[&a, &b]).unwrap();
        assert!(r > 2.0);
        assert!(r.is_infinite());
        // Distinct levels with a little within-chain noise: large but finite.
        let mut a = [0.0; 10];
        let mut b = [5.0; 10];
        a[0] = 0.1;
        b[0] = 5.1;
        let r = psrf_scalar(&[&a, &b]).unwrap();
        assert!(r.is_finite() && r > 2.0, "got {r}");
    }

    #[test]
    fn psrf_scalar_validates_inputs() {
        let a = [1.0, 2.0];
        assert!(psrf_scalar(&[&a]).is_err(), "single chain");
        let short = [1.0];
        assert!(psrf_scalar(&[&short, &short]).is_err(), "length 1");
        let b = [1.0, 2.0, 3.0];
        assert!(psrf_scalar(&[&a, &b]).is_err(), "unequal lengths");
    }

    #[test]
    fn iid_chains_calibrate_below_the_reference_line() {
        // 5 chains × 2000 draws × 30 parameters of i.i.d. N(0,1) noise:
        // every R̂^{1/2} should sit well under the 1.1 reference line.
        let mut rng = RngStream::from_u64(601);
        let chains: Vec<Vec<Vec<f64>>> = (0..5)
            .map(|_| {
                (0..30)
                    .map(|_| (0..2000).map(|_| rng.sample(StandardNormal)).collect())
                    .collect()
            })
            .collect();
        let mut max = f64::NEG_INFINITY;
        for p in 0..30 {
            let series: Vec<&[f64]> = chains.iter().map(|c| c[p].as_slice()).collect();
            max = max.max(psrf_scalar(&series).unwrap());
        }
        assert!(max < 1.1, "max R̂^{{1/2}} = {max}");
    }

    fn noisy_store(seed: u64, n_draws: usize) -> ChainStore {
        let layout = ParamLayout::dina(2, 1, 1);
        let mut store =
            ChainStore::with_capacity(ModelKind::Dina, Method::Sequential, layout, n_draws);
        let mut rng = RngStream::from_u64(seed);
        for t in 0..n_draws {
            let g = 0.2 + 0.05 * rng.sample::<f64, _>(StandardNormal);
            let s = 0.1 + 0.05 * rng.sample::<f64, _>(StandardNormal);
            let p = rng.random_range(0.3..0.7);
            store
                .push_iteration(t + 1, &[g, s], &[p, 1.0 - p], &[0b1, 0b0])
                .unwrap();
        }
        store
    }

    #[test]
    fn psrf_report_covers_item_and_population_parameters() {
        let a = noisy_store(7, 200);
        let b = noisy_store(8, 200);
        let report = psrf(&[&a, &b]).unwrap();
        assert_eq!(report.labels, vec!["g1", "s1", "c1", "c2"]);
        assert_eq!(report.values.len(), 4);
        assert_eq!((report.n_chains, report.n_draws), (2, 200));
        let max = report.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(report.max, max);
        assert!(report.max < 1.2, "stationary noise should look converged");
    }

    #[test]
    fn psrf_requires_comparable_chains() {
        let a = noisy_store(7, 200);
        assert!(psrf(&[&a]).is_err(), "single chain");
        let short = noisy_store(8, 5);
        let short2 = noisy_store(9, 5);
        assert!(psrf(&[&short, &short2]).is_err(), "too few draws");
        let unequal = noisy_store(10, 150);
        assert!(psrf(&[&a, &unequal]).is_err(), "unequal lengths");
        let mut other_layout =
            ChainStore::with_capacity(ModelKind::Dina, Method::Sequential, ParamLayout::dina(3, 1, 1), 0);
        for t in 0..200 {
            other_layout
                .push_iteration(t + 1, &[0.2, 0.1], &[0.5, 0.5], &[0, 0, 0])
                .unwrap();
        }
        assert!(psrf(&[&a, &other_layout]).is_err(), "different layouts");
    }

    #[test]
    fn trace_points_match_manual_truncation() {
        let a = noisy_store(11, 400);
        let b = noisy_store(12, 400);
        let trace = psrf_trace(&[&a, &b], &[50, 100, 400]).unwrap();
        assert_eq!(trace.len(), 3);
        assert_eq!(trace[0].prefix, 50);
        // Recompute the L = 100 point by hand: draws 50..100 of each series.
        let mut expect = f64::NEG_INFINITY;
        for p in 0..2 {
            let sa = a.item_series(p);
            let sb = b.item_series(p);
            expect = expect.max(psrf_scalar(&[&sa[50..100], &sb[50..100]]).unwrap());
        }
        for cc in 0..2 {
            let sa = a.pi_series(cc);
            let sb = b.pi_series(cc);
            expect = expect.max(psrf_scalar(&[&sa[50..100], &sb[50..100]]).unwrap());
        }
        assert_eq!(trace[1].max_psrf, expect);
        assert!(psrf_trace(&[&a, &b], &[500]).is_err(), "prefix too long");
        assert!(psrf_trace(&[&a, &b], &[2]).is_err(), "prefix too short");
        assert!(psrf_trace(&[&a, &b], &[]).is_err(), "no prefixes");
    }
}

//! The individual Gibbs updates, exposed as pure functions.
//!
//! Each function draws from one exact full conditional of the joint
//! posterior.  The chain drivers in [`super::runner`] compose these steps;
//! they are public so that their distributional correctness can be verified
//! in isolation (e.g. against brute-force enumeration of the attribute
//! conditionals, or against conjugate closed forms).

use super::{DeltaPrior, DinaPrior, GdinaPrior};
use crate::distributions::blr::blr_posterior_from_moments;
use crate::distributions::truncated::{
    bernoulli, beta_sample, dirichlet_sample, trunc_normal_sample, Interval,
};
use crate::error::{Error, Result};
use crate::model::{
    gdina_response_prob, ln_clamped, term_masks, term_value, DinaParams, GdinaItemParams,
    PopulationDist, QMatrix,
};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, RngCore};
use statrs::distribution::{Beta as BetaDist, ContinuousCDF};

/// Numerically stable logistic function `1 / (1 + e^{−d})`.
///
/// Maps `−∞ → 0` and `+∞ → 1` exactly.
pub(crate) fn sigmoid(d: f64) -> f64 {
    if d >= 0.0 {
        1.0 / (1.0 + (-d).exp())
    } else {
        let e = d.exp();
        e / (1.0 + e)
    }
}

// ---------------------------------------------------------------------------
// Population prior conditional
// ---------------------------------------------------------------------------

/// Prior conditional probability that attribute `k` is mastered given the
/// *other* attributes of the profile: with `c₀`/`c₁` the two classes that
/// agree with `alpha` everywhere except attribute `k`,
/// `p = π(c₁) / (π(c₀) + π(c₁))`.
///
/// This is the O(1) two-entry lookup that keeps the sequential sampler
/// linear in `K`.  Errors if both entries have zero mass.
pub fn prior_conditional_prob(pi: &PopulationDist, alpha: u32, k: usize) -> Result<f64> {
    if k >= pi.n_attrs() {
        return Err(Error::config(format!(
            "attribute index {k} out of range for K={}",
            pi.n_attrs()
        )));
    }
    let bit = 1u32 << k;
    let p0 = pi.prob(alpha & !bit);
    let p1 = pi.prob(alpha | bit);
    let denom = p0 + p1;
    if denom <= 0.0 {
        return Err(Error::numerical(
            0,
            format!("both classes conditioning attribute {} have zero mass", k + 1),
        ));
    }
    Ok(p1 / denom)
}

// ---------------------------------------------------------------------------
// Probit data augmentation
// ---------------------------------------------------------------------------

/// Draws the latent probit response `Z` for one observed response.
///
/// `Z ~ N(mean, 1)` truncated to `(0, ∞)` when `y = 1` and to `(−∞, 0]`
/// when `y = 0`, so the sign of `Z` always matches the response (zero is
/// assigned to the `y = 0` side).
pub fn sample_augmented<R: RngCore>(rng: &mut R, y: u8, mean: f64) -> Result<f64> {
    if y > 1 {
        return Err(Error::data(format!("responses must be 0 or 1, got {y}")));
    }
    let interval = if y == 1 {
        Interval::nonnegative()
    } else {
        Interval::nonpositive()
    };
    let z = trunc_normal_sample(rng, mean, 1.0, interval)?;
    // Keep Z = 0 exclusively on the y = 0 side.
    if y == 1 && z == 0.0 {
        Ok(f64::MIN_POSITIVE)
    } else {
        Ok(z)
    }
}

// ---------------------------------------------------------------------------
// G-DINA coefficient update
// ---------------------------------------------------------------------------

/// Draws a new coefficient vector for one G-DINA item from its conjugate
/// conditional given the latent responses.
///
/// `z[i]` is the latent probit response of examinee `i` on this item and
/// `reduced_profiles[i]` the examinee's profile restricted to the item's
/// required attributes.  Because the design vector only depends on the
/// reduced profile, the regression moments `XᵀX` and `Xᵀz` are accumulated
/// per distinct reduced profile — O(N + 2^K* · P²) instead of O(N · P²).
///
/// With `truncation` set, the draw comes from the sequential-conditional
/// truncated sampler with `refine_sweeps` refinement sweeps.
pub fn sample_lambda<R: RngCore>(
    rng: &mut R,
    z: &[f64],
    reduced_profiles: &[u32],
    k_star: usize,
    prior: &GdinaPrior,
    truncation: Option<&[Interval]>,
    refine_sweeps: usize,
) -> Result<Vec<f64>> {
    if z.len() != reduced_profiles.len() {
        return Err(Error::config(format!(
            "z has {} entries but reduced profiles {}",
            z.len(),
            reduced_profiles.len()
        )));
    }
    if k_star > 20 {
        return Err(Error::config(format!(
            "an item requiring {k_star} attributes is not supported (limit 20)"
        )));
    }
    prior.validate()?;
    let n_masks = 1usize << k_star;
    let p = n_masks; // design dimension equals the number of reduced masks
    if let Some(itvs) = truncation {
        if itvs.len() != p {
            return Err(Error::config(format!(
                "{} truncation intervals supplied for {p} coefficients",
                itvs.len()
            )));
        }
    }

    // Aggregate sufficient statistics by reduced profile.
    let mut counts = vec![0usize; n_masks];
    let mut zsums = vec![0.0f64; n_masks];
    for (&zi, &m) in z.iter().zip(reduced_profiles) {
        let m = m as usize;
        if m >= n_masks {
            return Err(Error::data(format!(
                "reduced profile {m} out of range for {k_star} required attributes"
            )));
        }
        if !zi.is_finite() {
            return Err(Error::numerical(0, format!("non-finite latent response {zi}")));
        }
        counts[m] += 1;
        zsums[m] += zi;
    }

    let terms = term_masks(k_star);
    let mut xtx = DMatrix::<f64>::zeros(p, p);
    let mut xtz = DVector::<f64>::zeros(p);
    let mut active = Vec::with_capacity(p);
    for m in 0..n_masks {
        if counts[m] == 0 {
            continue;
        }
        active.clear();
        for (t, &tm) in terms.iter().enumerate() {
            if term_value(m as u32, tm) == 1.0 {
                active.push(t);
            }
        }
        let c = counts[m] as f64;
        let s = zsums[m];
        for &a in &active {
            xtz[a] += s;
            for &b in &active {
                xtx[(a, b)] += c;
            }
        }
    }

    let mut mu0 = DVector::<f64>::zeros(p);
    let mut sigma0 = DMatrix::<f64>::zeros(p, p);
    for (t, &tm) in terms.iter().enumerate() {
        let (m, sd) = prior.coef_prior(tm);
        mu0[t] = m;
        sigma0[(t, t)] = sd * sd;
    }

    let post = blr_posterior_from_moments(&xtx, &xtz, &mu0, &sigma0)?;
    let draw = match truncation {
        None => post.sample(rng)?,
        Some(itvs) => post.sample_truncated(rng, itvs, refine_sweeps)?,
    };
    Ok(draw.iter().copied().collect())
}

// ---------------------------------------------------------------------------
// Attribute updates
// ---------------------------------------------------------------------------

/// Conditional mastery probability of attribute `k` for one examinee under
/// the probit G-DINA model, together with the number of items whose
/// likelihood was evaluated.
///
/// Only the items requiring attribute `k` enter the likelihood ratio — the
/// contributions of every other item are identical under both values of
/// the attribute and cancel.  The prior enters through the O(1) two-entry
/// class lookup of [`prior_conditional_prob`].
pub fn attr_conditional_gdina(
    q: &QMatrix,
    params: &[GdinaItemParams],
    pi: &PopulationDist,
    y_row: &[u8],
    alpha: u32,
    k: usize,
) -> Result<(f64, usize)> {
    if params.len() != q.n_items() || y_row.len() != q.n_items() {
        return Err(Error::config(
            "item parameters, responses, and Q-matrix must cover the same items",
        ));
    }
    let bit = 1u32 << k;
    let c0 = alpha & !bit;
    let c1 = alpha | bit;
    let p0 = pi.prob(c0);
    let p1 = pi.prob(c1);
    if p0 + p1 <= 0.0 {
        return Err(Error::numerical(
            0,
            format!("both classes conditioning attribute {} have zero mass", k + 1),
        ));
    }
    // Work with the log odds d = ln π(c₁)/π(c₀) + Σ_j Δ log-likelihood; an
    // infinite d (one-sided zero prior mass) maps to probability 0 or 1.
    let mut d = p1.ln() - p0.ln();
    let mut touched = 0usize;
    for j in 0..q.n_items() {
        let mask = q.row_mask(j);
        if mask & bit == 0 {
            continue;
        }
        let theta0 = gdina_response_prob(c0, mask, &params[j])?;
        let theta1 = gdina_response_prob(c1, mask, &params[j])?;
        d += if y_row[j] == 1 {
            ln_clamped(theta1) - ln_clamped(theta0)
        } else {
            ln_clamped(1.0 - theta1) - ln_clamped(1.0 - theta0)
        };
        touched += 1;
    }
    Ok((sigmoid(d), touched))
}

/// Conditional mastery probability of attribute `k` for one examinee under
/// the DINA model, together with the number of items whose likelihood was
/// evaluated.
///
/// Under DINA an item requiring attribute `k` distinguishes the two values
/// of the attribute only when the examinee holds *all other* required
/// attributes of the item; for every other item the ideal response is 0
/// either way and the contribution cancels.  Only that active subset is
/// touched.
pub fn attr_conditional_dina(
    q: &QMatrix,
    params: &DinaParams,
    pi: &PopulationDist,
    y_row: &[u8],
    alpha: u32,
    k: usize,
) -> Result<(f64, usize)> {
    if params.guess.len() != q.n_items() || y_row.len() != q.n_items() {
        return Err(Error::config(
            "item parameters, responses, and Q-matrix must cover the same items",
        ));
    }
    let bit = 1u32 << k;
    let c0 = alpha & !bit;
    let c1 = alpha | bit;
    let p0 = pi.prob(c0);
    let p1 = pi.prob(c1);
    if p0 + p1 <= 0.0 {
        return Err(Error::numerical(
            0,
            format!("both classes conditioning attribute {} have zero mass", k + 1),
        ));
    }
    let mut d = p1.ln() - p0.ln();
    let mut touched = 0usize;
    for j in 0..q.n_items() {
        let mask = q.row_mask(j);
        if mask & bit == 0 {
            continue;
        }
        // Skip items where another required attribute is absent: their
        // success probability is the guess either way.
        if c1 & mask != mask {
            continue;
        }
        let g = params.guess[j];
        let s = params.slip[j];
        d += if y_row[j] == 1 {
            ln_clamped(1.0 - s) - ln_clamped(g)
        } else {
            ln_clamped(s) - ln_clamped(1.0 - g)
        };
        touched += 1;
    }
    Ok((sigmoid(d), touched))
}

/// Draws attribute `k` of one examinee from its G-DINA full conditional.
pub fn sample_attribute_gdina<R: RngCore>(
    rng: &mut R,
    q: &QMatrix,
    params: &[GdinaItemParams],
    pi: &PopulationDist,
    y_row: &[u8],
    alpha: u32,
    k: usize,
) -> Result<bool> {
    let (p, _) = attr_conditional_gdina(q, params, pi, y_row, alpha, k)?;
    bernoulli(rng, p)
}

/// Draws attribute `k` of one examinee from its DINA full conditional.
pub fn sample_attribute_dina<R: RngCore>(
    rng: &mut R,
    q: &QMatrix,
    params: &DinaParams,
    pi: &PopulationDist,
    y_row: &[u8],
    alpha: u32,
    k: usize,
) -> Result<bool> {
    let (p, _) = attr_conditional_dina(q, params, pi, y_row, alpha, k)?;
    bernoulli(rng, p)
}

// ---------------------------------------------------------------------------
// Population update
// ---------------------------------------------------------------------------

/// Draws the class distribution `π` from its conjugate Dirichlet
/// conditional `Dirichlet(δ + class counts)` given the current profiles.
pub fn sample_pi<R: RngCore>(
    rng: &mut R,
    alpha: &[u32],
    n_attrs: usize,
    delta: &DeltaPrior,
) -> Result<Vec<f64>> {
    let n_classes = 1usize << n_attrs;
    let mut shapes = delta.expand(n_classes)?;
    for &a in alpha {
        let c = a as usize;
        if c >= n_classes {
            return Err(Error::data(format!(
                "profile mask {c} out of range for K={n_attrs}"
            )));
        }
        shapes[c] += 1.0;
    }
    dirichlet_sample(rng, &shapes)
}

// ---------------------------------------------------------------------------
// DINA item-parameter update
// ---------------------------------------------------------------------------

/// Sufficient statistics for one DINA item: response counts split by the
/// ideal response `η`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DinaItemCounts {
    /// Examinees with `η = 0` answering correctly (lucky guesses).
    pub guess_correct: usize,
    /// Examinees with `η = 0` answering incorrectly.
    pub guess_wrong: usize,
    /// Examinees with `η = 1` answering correctly.
    pub slip_correct: usize,
    /// Examinees with `η = 1` answering incorrectly (slips).
    pub slip_wrong: usize,
}

/// Draws new `(guess, slip)` for one DINA item from the conjugate Beta
/// conditionals.
///
/// The slip is drawn first from `Beta(a_s + slips, b_s + non-slips)`; the
/// guess then comes from `Beta(a_g + lucky, b_g + unlucky)`, truncated to
/// `[0, 1 − s)` when the prior enforces monotonicity (via the Beta inverse
/// CDF, so no rejection loop is needed).
pub fn sample_dina_item_params<R: RngCore>(
    rng: &mut R,
    counts: DinaItemCounts,
    prior: &DinaPrior,
) -> Result<(f64, f64)> {
    prior.validate()?;
    let slip = beta_sample(
        rng,
        prior.slip_a + counts.slip_wrong as f64,
        prior.slip_b + counts.slip_correct as f64,
    )?;
    let ga = prior.guess_a + counts.guess_correct as f64;
    let gb = prior.guess_b + counts.guess_wrong as f64;
    let guess = if prior.monotone {
        let upper = 1.0 - slip;
        let dist = BetaDist::new(ga, gb)
            .map_err(|e| Error::config(format!("invalid Beta shapes ({ga}, {gb}): {e}")))?;
        let cap = dist.cdf(upper);
        let u: f64 = rng.random::<f64>() * cap;
        let raw = if u > 0.0 && cap > 0.0 {
            dist.inverse_cdf(u)
        } else {
            // The admissible region has no representable CDF mass (an
            // extreme numerical corner); fall back to a uniform point in it.
            upper * rng.random::<f64>()
        };
        // Keep the draw strictly below 1 − s despite inverse-CDF rounding.
        raw.min(upper * (1.0 - 1e-15))
    } else {
        beta_sample(rng, ga, gb)?
    };
    Ok((guess, slip))
}

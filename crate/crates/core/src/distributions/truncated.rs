//! Truncated normal, Dirichlet, Beta, and truncated multivariate normal
//! sampling.
//!
//! The truncated univariate normal sampler is the workhorse of the probit
//! data augmentation step, so it has to be correct over the whole real line:
//! inverse-CDF inversion is used where the CDF has precision (the body of
//! the distribution, after reflecting to the numerically favourable side),
//! an exponential rejection scheme handles one-sided far tails, and a
//! survival-scale inversion handles bounded far-tail windows.  The sampler
//! never returns values outside the requested interval and never loops
//! unboundedly.
//!
//! The truncated multivariate normal sampler factors the distribution into
//! a chain of univariate conditionals via the Cholesky factor: component `p`
//! is drawn from its exact untruncated conditional given components
//! `1..p−1`, truncated to its own interval.  That one-pass scheme is exact
//! when there is no truncation or when the covariance is diagonal; with
//! correlated truncation it is an approximation that can optionally be
//! refined by full-conditional Gibbs sweeps (each sweep's conditionals are
//! exact, so the sweeps converge to the true truncated distribution).

use crate::distributions::normal::{normal_cdf, normal_quantile, normal_sf};
use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, RngCore};
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

/// Standardised distance from the mean beyond which the inverse-CDF route
/// loses precision and tail-specific schemes take over.
const TAIL_CUT: f64 = 5.0;

/// A truncation interval `[lo, hi]`; either bound may be infinite.
///
/// For continuous distributions the openness of the endpoints is
/// immaterial, with one exception honoured by the samplers: a draw exactly
/// equal to an endpoint of zero is nudged off it so that sign conventions
/// (`Z > 0` versus `Z ≤ 0`) stay unambiguous.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    /// Lower bound (may be `-∞`).
    pub lo: f64,
    /// Upper bound (may be `+∞`).
    pub hi: f64,
}

impl Interval {
    /// Creates an interval, rejecting empty or NaN-bounded ones.
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() {
            return Err(Error::config("interval bounds must not be NaN"));
        }
        if !(lo < hi) {
            return Err(Error::config(format!(
                "empty truncation interval [{lo}, {hi}]"
            )));
        }
        Ok(Interval { lo, hi })
    }

    /// The whole real line (no truncation).
    pub fn unbounded() -> Self {
        Interval {
            lo: f64::NEG_INFINITY,
            hi: f64::INFINITY,
        }
    }

    /// `[0, ∞)`.
    pub fn nonnegative() -> Self {
        Interval {
            lo: 0.0,
            hi: f64::INFINITY,
        }
    }

    /// `(−∞, 0]`.
    pub fn nonpositive() -> Self {
        Interval {
            lo: f64::NEG_INFINITY,
            hi: 0.0,
        }
    }

    /// Whether `x` lies inside the interval.
    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    /// Whether the interval imposes no constraint.
    pub fn is_unbounded(&self) -> bool {
        self.lo == f64::NEG_INFINITY && self.hi == f64::INFINITY
    }
}

/// Draws a uniform variate strictly inside `(0, 1)`.
fn open_unit<R: RngCore>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}

/// One-sided upper-tail sampler for the standard normal on `[a, ∞)`,
/// `a ≥ TAIL_CUT`, by exponential rejection.
///
/// Proposes `x = a + Exp(λ)` with `λ = (a + √(a²+4))/2` and accepts with
/// probability `exp(−(x−λ)²/2)`; the acceptance rate tends to one as `a`
/// grows, so the loop terminates almost immediately in the regime where it
/// is used.
fn sample_upper_tail_unbounded<R: RngCore>(rng: &mut R, a: f64) -> f64 {
    let lambda = 0.5 * (a + (a * a + 4.0).sqrt());
    loop {
        let e: f64 = Exp1.sample(rng);
        let x = a + e / lambda;
        let u: f64 = rng.random();
        if u <= (-0.5 * (x - lambda) * (x - lambda)).exp() {
            return x;
        }
    }
}

/// Inverse-CDF sampler on `[a, b]` for the standard normal, assuming the
/// interval is in the body or lower half where `Φ` retains precision.
fn sample_by_cdf_inversion<R: RngCore>(rng: &mut R, a: f64, b: f64) -> f64 {
    let pa = if a == f64::NEG_INFINITY {
        0.0
    } else {
        normal_cdf(a)
    };
    let pb = if b == f64::INFINITY { 1.0 } else { normal_cdf(b) };
    let u = pa + open_unit(rng) * (pb - pa);
    if u <= 0.0 {
        // Both CDF values rounded to zero: the interval sits below the
        // resolution of Φ, which the tail branches should have prevented;
        // fall back to the nearest representable point.
        return b.min(a.max(-38.0));
    }
    let x = match normal_quantile(u) {
        Ok(x) => x,
        // u rounded up to 1.0 can only happen with b = +∞.
        Err(_) => 8.3,
    };
    x.clamp(a, b)
}

/// Survival-scale inverse-CDF sampler on a bounded far-upper-tail interval
/// `[a, b]`, `a ≥ TAIL_CUT`, `b < ∞`.  Works with `1 − Φ`, which keeps full
/// relative accuracy for large arguments.
fn sample_tail_by_survival_inversion<R: RngCore>(rng: &mut R, a: f64, b: f64) -> f64 {
    let sa = normal_sf(a);
    let sb = normal_sf(b);
    let u = sb + open_unit(rng) * (sa - sb);
    if u <= 0.0 {
        return a;
    }
    // Φc(x) = u  ⇔  x = −Φ⁻¹(u).
    let x = match normal_quantile(u) {
        Ok(q) => -q,
        Err(_) => a,
    };
    x.clamp(a, b)
}

/// Samples the standard normal truncated to `[a, b]`.
fn sample_std_truncated<R: RngCore>(rng: &mut R, a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY && b == f64::INFINITY {
        return StandardNormal.sample(rng);
    }
    // Entirely in the lower far tail: reflect into the upper tail.
    if b <= -TAIL_CUT {
        return -sample_std_truncated_upper(rng, -b, -a);
    }
    if a >= TAIL_CUT {
        return sample_std_truncated_upper(rng, a, b);
    }
    // Body: invert the CDF on whichever side keeps small probabilities.
    let midpoint_above_zero = match (a == f64::NEG_INFINITY, b == f64::INFINITY) {
        (true, true) => unreachable!("handled above"),
        (true, false) => false,
        (false, true) => true,
        (false, false) => a + b > 0.0,
    };
    if midpoint_above_zero {
        -sample_by_cdf_inversion(rng, -b, -a)
    } else {
        sample_by_cdf_inversion(rng, a, b)
    }
}

/// Upper-tail dispatcher for `a ≥ TAIL_CUT`.
fn sample_std_truncated_upper<R: RngCore>(rng: &mut R, a: f64, b: f64) -> f64 {
    if b == f64::INFINITY {
        sample_upper_tail_unbounded(rng, a)
    } else {
        sample_tail_by_survival_inversion(rng, a, b)
    }
}

/// Draws from the normal distribution `N(mu, sigma²)` truncated to
/// `interval`.
///
/// The result is always finite and inside the interval.  Accurate for
/// intervals arbitrarily far into either tail.
pub fn trunc_normal_sample<R: RngCore>(
    rng: &mut R,
    mu: f64,
    sigma: f64,
    interval: Interval,
) -> Result<f64> {
    if !mu.is_finite() {
        return Err(Error::config(format!(
            "truncated normal mean must be finite, got {mu}"
        )));
    }
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::config(format!(
            "truncated normal sd must be positive and finite, got {sigma}"
        )));
    }
    if interval.lo.is_nan() || interval.hi.is_nan() || !(interval.lo < interval.hi) {
        return Err(Error::config(format!(
            "empty truncation interval [{}, {}]",
            interval.lo, interval.hi
        )));
    }
    let a = (interval.lo - mu) / sigma;
    let b = (interval.hi - mu) / sigma;
    let x = mu + sigma * sample_std_truncated(rng, a, b);
    Ok(x.clamp(interval.lo, interval.hi))
}

/// Draws a Bernoulli variate with success probability `p ∈ [0, 1]`.
pub fn bernoulli<R: RngCore>(rng: &mut R, p: f64) -> Result<bool> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::numerical(
            0,
            format!("Bernoulli probability {p} outside [0,1]"),
        ));
    }
    let u: f64 = rng.random();
    Ok(u < p)
}

/// Draws from the Beta distribution with shape parameters `a, b > 0`.
pub fn beta_sample<R: RngCore>(rng: &mut R, a: f64, b: f64) -> Result<f64> {
    if !(a.is_finite() && a > 0.0 && b.is_finite() && b > 0.0) {
        return Err(Error::config(format!(
            "Beta shapes must be positive and finite, got ({a}, {b})"
        )));
    }
    let dist = rand_distr::Beta::new(a, b)
        .map_err(|e| Error::config(format!("invalid Beta parameters ({a}, {b}): {e}")))?;
    Ok(dist.sample(rng))
}

/// Draws from the Dirichlet distribution with concentration vector `delta`.
///
/// Implemented as normalised independent Gamma draws.  With very small
/// concentrations individual components may underflow to exactly zero —
/// that is a legitimate (if extreme) realisation and is passed through; the
/// astronomically unlikely event that *all* components underflow is retried.
pub fn dirichlet_sample<R: RngCore>(rng: &mut R, delta: &[f64]) -> Result<Vec<f64>> {
    if delta.len() < 2 {
        return Err(Error::config(
            "Dirichlet needs at least two concentration parameters",
        ));
    }
    if let Some(bad) = delta.iter().find(|d| !(d.is_finite() && **d > 0.0)) {
        return Err(Error::config(format!(
            "Dirichlet concentrations must be positive and finite, got {bad}"
        )));
    }
    let gammas: Vec<rand_distr::Gamma<f64>> = delta
        .iter()
        .map(|&d| {
            rand_distr::Gamma::new(d, 1.0)
                .map_err(|e| Error::config(format!("invalid Gamma shape {d}: {e}")))
        })
        .collect::<Result<_>>()?;
    for _ in 0..64 {
        let draws: Vec<f64> = gammas.iter().map(|g| g.sample(rng)).collect();
        let sum: f64 = draws.iter().sum();
        if sum > 0.0 && sum.is_finite() {
            return Ok(draws.into_iter().map(|x| x / sum).collect());
        }
    }
    Err(Error::numerical(
        0,
        "Dirichlet draw degenerate: all Gamma components underflowed repeatedly",
    ))
}

/// The conditional law of one multivariate normal component given all the
/// preceding ones: `X_p | X_{1..p−1} = x  ~  N(intercept + coef·x, var)`.
#[derive(Debug, Clone)]
pub struct ChainConditional {
    /// Coefficients on the `p−1` preceding components.
    pub coef: Vec<f64>,
    /// Constant term of the conditional mean.
    pub intercept: f64,
    /// Conditional variance (does not depend on the conditioning values).
    pub var: f64,
}

impl ChainConditional {
    /// Evaluates the conditional mean at the given prefix of components.
    pub fn mean(&self, prefix: &[f64]) -> f64 {
        let mut m = self.intercept;
        for (c, x) in self.coef.iter().zip(prefix) {
            m += c * x;
        }
        m
    }
}

/// Validates that `sigma` is square, finite, symmetric (within `1e-12`
/// relative to its largest entry), and matches `dim`.
fn validate_covariance(sigma: &DMatrix<f64>, dim: usize) -> Result<()> {
    if sigma.nrows() != dim || sigma.ncols() != dim {
        return Err(Error::config(format!(
            "covariance must be {dim}×{dim}, got {}×{}",
            sigma.nrows(),
            sigma.ncols()
        )));
    }
    let mut scale: f64 = 0.0;
    for v in sigma.iter() {
        if !v.is_finite() {
            return Err(Error::config("covariance has non-finite entries"));
        }
        scale = scale.max(v.abs());
    }
    let tol = 1e-12 * scale.max(1.0);
    for r in 0..dim {
        for c in (r + 1)..dim {
            if (sigma[(r, c)] - sigma[(c, r)]).abs() > tol {
                return Err(Error::config("covariance matrix is not symmetric"));
            }
        }
    }
    Ok(())
}

/// Factors `N(mu, sigma)` into the chain of conditionals
/// `X_1`, `X_2 | X_1`, …, `X_P | X_{1..P−1}`.
///
/// Each conditional mean is affine in the conditioning values and each
/// conditional variance is a constant — both read off the Cholesky factor
/// `L` of `sigma`: with `ε = L₁₁⁻¹(x − μ_{<p})`, component `p` is
/// `μ_p + l_p·ε + L_pp ζ`, so the coefficient vector solves `L₁₁ᵀ a = l_p`
/// and the variance is `L_pp²`.
pub fn mvn_chain_conditionals(
    mu: &DVector<f64>,
    sigma: &DMatrix<f64>,
) -> Result<Vec<ChainConditional>> {
    let dim = mu.len();
    if dim == 0 {
        return Err(Error::config("multivariate normal must have dimension ≥ 1"));
    }
    validate_covariance(sigma, dim)?;
    let chol = nalgebra::Cholesky::new(sigma.clone())
        .ok_or_else(|| Error::config("covariance matrix is not positive definite"))?;
    let l = chol.l();

    let mut out = Vec::with_capacity(dim);
    for p in 0..dim {
        // Solve L₁₁ᵀ a = l_p by back substitution (L₁₁ᵀ is upper triangular).
        let mut coef = vec![0.0f64; p];
        for t in (0..p).rev() {
            let mut s = l[(p, t)];
            for (u, cu) in coef.iter().enumerate().skip(t + 1) {
                s -= l[(u, t)] * cu;
            }
            coef[t] = s / l[(t, t)];
        }
        let mut intercept = mu[p];
        for (t, c) in coef.iter().enumerate() {
            intercept -= c * mu[t];
        }
        let var = l[(p, p)] * l[(p, p)];
        out.push(ChainConditional {
            coef,
            intercept,
            var,
        });
    }
    Ok(out)
}

/// Draws from `N(mu, sigma)` truncated componentwise to `intervals`.
///
/// One forward pass samples each component from its exact conditional given
/// the already-drawn prefix, truncated to that component's interval.  The
/// pass is exact when no interval is binding or when `sigma` is diagonal;
/// otherwise it is an approximation whose error can be reduced by
/// `refine_sweeps` full-conditional Gibbs sweeps over the components (the
/// sweeps use the true one-dimensional conditionals, so the chain's
/// stationary law is the exact truncated normal).
pub fn trunc_mvn_sequential_sample<R: RngCore>(
    rng: &mut R,
    mu: &DVector<f64>,
    sigma: &DMatrix<f64>,
    intervals: &[Interval],
    refine_sweeps: usize,
) -> Result<DVector<f64>> {
    let dim = mu.len();
    if intervals.len() != dim {
        return Err(Error::config(format!(
            "expected {dim} truncation intervals, got {}",
            intervals.len()
        )));
    }
    let conds = mvn_chain_conditionals(mu, sigma)?;
    let mut x = DVector::zeros(dim);
    for (p, cond) in conds.iter().enumerate() {
        let mean = cond.mean(&x.as_slice()[..p]);
        x[p] = trunc_normal_sample(rng, mean, cond.var.sqrt(), intervals[p])?;
    }

    if refine_sweeps > 0 {
        // Full-conditional refinement uses the precision matrix: for
        // Λ = Σ⁻¹, the conditional of X_p given the rest is
        // N(μ_p − Λ_pp⁻¹ Σ_{q≠p} Λ_pq (x_q − μ_q), Λ_pp⁻¹).
        let chol = nalgebra::Cholesky::new(sigma.clone())
            .ok_or_else(|| Error::config("covariance matrix is not positive definite"))?;
        let prec = chol.inverse();
        for _ in 0..refine_sweeps {
            for p in 0..dim {
                let cvar = 1.0 / prec[(p, p)];
                let mut shift = 0.0;
                for q in 0..dim {
                    if q != p {
                        shift += prec[(p, q)] * (x[q] - mu[q]);
                    }
                }
                let cmean = mu[p] - cvar * shift;
                x[p] = trunc_normal_sample(rng, cmean, cvar.sqrt(), intervals[p])?;
            }
        }
    }
    Ok(x)
}

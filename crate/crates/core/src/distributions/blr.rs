//! Conjugate Bayesian linear regression with unit residual variance.
//!
//! The probit augmentation step turns the item-parameter update into exactly
//! this problem: given latent responses `z = Xλ + ε`, `ε ~ N(0, I)`, and a
//! normal prior `λ ~ N(μ₀, Σ₀)`, the posterior is normal with
//!
//! ```text
//! Σ̂⁻¹ = Σ₀⁻¹ + XᵀX        μ̂ = Σ̂ (Xᵀz + Σ₀⁻¹μ₀)
//! ```
//!
//! Because `XᵀX` and `Xᵀz` are sufficient, the sampler accumulates them
//! directly (grouped by the handful of distinct design rows) instead of
//! materialising `X`; [`blr_posterior_from_moments`] accepts those
//! aggregates, while [`blr_posterior`] takes the raw design matrix.

use crate::distributions::truncated::{trunc_mvn_sequential_sample, Interval};
use crate::error::{Error, Result};
use nalgebra::{Cholesky, DMatrix, DVector};
use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};

/// A multivariate normal posterior `N(mean, cov)` for regression
/// coefficients.
#[derive(Debug, Clone)]
pub struct BlrPosterior {
    /// Posterior mean `μ̂`.
    pub mean: DVector<f64>,
    /// Posterior covariance `Σ̂` (symmetric positive definite).
    pub cov: DMatrix<f64>,
}

impl BlrPosterior {
    /// Draws one coefficient vector from the posterior.
    pub fn sample<R: RngCore>(&self, rng: &mut R) -> Result<DVector<f64>> {
        let chol = Cholesky::new(self.cov.clone())
            .ok_or_else(|| Error::config("posterior covariance is not positive definite"))?;
        let p = self.mean.len();
        let zeta = DVector::from_fn(p, |_, _| StandardNormal.sample(rng));
        Ok(&self.mean + chol.l() * zeta)
    }

    /// Draws one coefficient vector truncated componentwise to `intervals`,
    /// using the sequential-conditional scheme with optional refinement
    /// sweeps.
    pub fn sample_truncated<R: RngCore>(
        &self,
        rng: &mut R,
        intervals: &[Interval],
        refine_sweeps: usize,
    ) -> Result<DVector<f64>> {
        trunc_mvn_sequential_sample(rng, &self.mean, &self.cov, intervals, refine_sweeps)
    }
}

/// Validates a prior and inverts its covariance via Cholesky.
fn prior_precision(prior_mean: &DVector<f64>, prior_cov: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let p = prior_mean.len();
    if p == 0 {
        return Err(Error::config("regression dimension must be at least 1"));
    }
    if prior_cov.nrows() != p || prior_cov.ncols() != p {
        return Err(Error::config(format!(
            "prior covariance must be {p}×{p}, got {}×{}",
            prior_cov.nrows(),
            prior_cov.ncols()
        )));
    }
    if prior_mean.iter().any(|v| !v.is_finite()) || prior_cov.iter().any(|v| !v.is_finite()) {
        return Err(Error::config("prior has non-finite entries"));
    }
    let chol = Cholesky::new(prior_cov.clone())
        .ok_or_else(|| Error::config("prior covariance is not positive definite"))?;
    Ok(chol.inverse())
}

/// Posterior of the coefficients from pre-aggregated sufficient statistics
/// `xtx = XᵀX` and `xtz = Xᵀz`.
pub fn blr_posterior_from_moments(
    xtx: &DMatrix<f64>,
    xtz: &DVector<f64>,
    prior_mean: &DVector<f64>,
    prior_cov: &DMatrix<f64>,
) -> Result<BlrPosterior> {
    let p = prior_mean.len();
    if xtx.nrows() != p || xtx.ncols() != p || xtz.len() != p {
        return Err(Error::config(format!(
            "moment dimensions ({}×{}, {}) do not match coefficient dimension {p}",
            xtx.nrows(),
            xtx.ncols(),
            xtz.len()
        )));
    }
    if xtx.iter().any(|v| !v.is_finite()) || xtz.iter().any(|v| !v.is_finite()) {
        return Err(Error::numerical(0, "regression moments are non-finite"));
    }
    let prec0 = prior_precision(prior_mean, prior_cov)?;
    let posterior_prec = &prec0 + xtx;
    let chol = Cholesky::new(posterior_prec)
        .ok_or_else(|| Error::numerical(0, "posterior precision is not positive definite"))?;
    let rhs = xtz + &prec0 * prior_mean;
    let mean = chol.solve(&rhs);
    let mut cov = chol.inverse();
    // Enforce exact symmetry lost to floating-point round-off.
    let cov_t = cov.transpose();
    cov = (cov + cov_t) * 0.5;
    Ok(BlrPosterior { mean, cov })
}

/// Posterior of the coefficients in `z = Xλ + ε`, `ε ~ N(0, I)`, under the
/// prior `λ ~ N(prior_mean, prior_cov)`.
///
/// `x` has one row per observation; a matrix with zero rows yields the
/// prior itself.
pub fn blr_posterior(
    x: &DMatrix<f64>,
    z: &DVector<f64>,
    prior_mean: &DVector<f64>,
    prior_cov: &DMatrix<f64>,
) -> Result<BlrPosterior> {
    let p = prior_mean.len();
    if x.ncols() != p {
        return Err(Error::config(format!(
            "design matrix has {} columns but the prior has dimension {p}",
            x.ncols()
        )));
    }
    if x.nrows() != z.len() {
        return Err(Error::config(format!(
            "design matrix has {} rows but z has length {}",
            x.nrows(),
            z.len()
        )));
    }
    let xtx = x.transpose() * x;
    let xtz = x.transpose() * z;
    blr_posterior_from_moments(&xtx, &xtz, prior_mean, prior_cov)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::rng::RngStream;
    use approx::assert_abs_diff_eq;

    #[test]
    fn no_data_returns_prior() {
        let x = DMatrix::<f64>::zeros(0, 2);
        let z = DVector::<f64>::zeros(0);
        let mu0 = DVector::from_vec(vec![1.0, -2.0]);
        let s0 = DMatrix::from_row_slice(2, 2, &[3.0, 0.5, 0.5, 2.0]);
        let post = blr_posterior(&x, &z, &mu0, &s0).unwrap();
        for p in 0..2 {
            assert_abs_diff_eq!(post.mean[p], mu0[p], epsilon = 1e-12);
            for q in 0..2 {
                assert_abs_diff_eq!(post.cov[(p, q)], s0[(p, q)], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn two_predictor_case_matches_hand_computation() {
        // X = [(1,0),(1,1),(1,0),(1,1)], z = (.5, 1.5, −.2, 2), μ₀ = 0,
        // Σ₀ = diag(4, 2).  Worked out exactly:
        //   Σ̂ = [[20/53, −16/53], [−16/53, 34/53]],
        //   μ̂ = (20/53, 58.2/53).
        let x = DMatrix::from_row_slice(4, 2, &[1.0, 0.0, 1.0, 1.0, 1.0, 0.0, 1.0, 1.0]);
        let z = DVector::from_vec(vec![0.5, 1.5, -0.2, 2.0]);
        let mu0 = DVector::zeros(2);
        let s0 = DMatrix::from_row_slice(2, 2, &[4.0, 0.0, 0.0, 2.0]);
        let post = blr_posterior(&x, &z, &mu0, &s0).unwrap();
        assert_abs_diff_eq!(post.mean[0], 20.0 / 53.0, epsilon = 1e-12);
        assert_abs_diff_eq!(post.mean[1], 58.2 / 53.0, epsilon = 1e-12);
        assert_abs_diff_eq!(post.cov[(0, 0)], 20.0 / 53.0, epsilon = 1e-12);
        assert_abs_diff_eq!(post.cov[(0, 1)], -16.0 / 53.0, epsilon = 1e-12);
        assert_abs_diff_eq!(post.cov[(1, 0)], -16.0 / 53.0, epsilon = 1e-12);
        assert_abs_diff_eq!(post.cov[(1, 1)], 34.0 / 53.0, epsilon = 1e-12);
    }

    #[test]
    fn flat_prior_recovers_sample_mean() {
        // Intercept-only design with an essentially flat prior: the
        // posterior mean must match the sample mean of z.
        let n = 100;
        let x = DMatrix::from_element(n, 1, 1.0);
        let z = DVector::from_fn(n, |i, _| 0.3 + 0.01 * i as f64);
        let mu0 = DVector::zeros(1);
        let s0 = DMatrix::from_element(1, 1, 1e8);
        let post = blr_posterior(&x, &z, &mu0, &s0).unwrap();
        let sample_mean = z.sum() / n as f64;
        assert_abs_diff_eq!(post.mean[0], sample_mean, epsilon = 1e-3);
        assert_abs_diff_eq!(post.cov[(0, 0)], 1.0 / n as f64, epsilon = 1e-5);
    }

    #[test]
    fn moment_entry_point_matches_design_entry_point() {
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 1.0, 1.0, 1.0, 1.0]);
        let z = DVector::from_vec(vec![0.1, 0.9, 1.1]);
        let mu0 = DVector::from_vec(vec![0.2, 0.4]);
        let s0 = DMatrix::from_row_slice(2, 2, &[1.0, 0.2, 0.2, 1.0]);
        let a = blr_posterior(&x, &z, &mu0, &s0).unwrap();
        let b = blr_posterior_from_moments(&(x.transpose() * &x), &(x.transpose() * &z), &mu0, &s0)
            .unwrap();
        for p in 0..2 {
            assert_abs_diff_eq!(a.mean[p], b.mean[p], epsilon = 1e-13);
        }
    }

    #[test]
    fn posterior_sampling_matches_posterior_moments() {
        let x = DMatrix::from_row_slice(4, 2, &[1.0, 0.0, 1.0, 1.0, 1.0, 0.0, 1.0, 1.0]);
        let z = DVector::from_vec(vec![0.5, 1.5, -0.2, 2.0]);
        let mu0 = DVector::zeros(2);
        let s0 = DMatrix::from_row_slice(2, 2, &[4.0, 0.0, 0.0, 2.0]);
        let post = blr_posterior(&x, &z, &mu0, &s0).unwrap();
        let mut rng = RngStream::from_u64(115);
        let n = 100_000;
        let mut sum = DVector::zeros(2);
        let mut sumsq = DMatrix::zeros(2, 2);
        for _ in 0..n {
            let d = post.sample(&mut rng).unwrap();
            sum += &d;
            sumsq += &d * d.transpose();
        }
        let mean = sum / n as f64;
        let cov = sumsq / n as f64 - &mean * mean.transpose();
        for p in 0..2 {
            assert_abs_diff_eq!(mean[p], post.mean[p], epsilon = 0.01);
            for q in 0..2 {
                assert_abs_diff_eq!(cov[(p, q)], post.cov[(p, q)], epsilon = 0.01);
            }
        }
    }

    #[test]
    fn dimension_mismatches_are_rejected() {
        let x = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 1.0, 1.0]);
        let z = DVector::from_vec(vec![0.5]);
        let mu0 = DVector::zeros(2);
        let s0 = DMatrix::identity(2, 2);
        assert!(blr_posterior(&x, &z, &mu0, &s0).is_err());
        let z2 = DVector::from_vec(vec![0.5, 0.7]);
        let bad_prior = DMatrix::identity(3, 3);
        let mu3 = DVector::zeros(3);
        assert!(blr_posterior(&x, &z2, &mu3, &bad_prior).is_err());
    }
}

use alloc::format;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::{check_finite, symmetrize, Basis, FitDiagnostics};
use crate::error::{invalid, Error, Result};
use crate::math::{digamma, ln_gamma, LN_2PI};

const MAX_NOISE_PRECISION: f64 = 1e12;

/// Hyperparameters of an expert fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearConfig {
    /// Shape of the Gamma prior on the weight precision.
    pub alpha_shape: f64,
    /// Rate of the Gamma prior on the weight precision.
    pub alpha_rate: f64,
    /// Pin the weight precision instead of learning it.
    pub fixed_alpha: Option<f64>,
    /// Starting weight precision when it is learned.
    pub alpha_init: f64,
    pub beta_init: f64,
    pub max_iters: usize,
    pub tol: f64,
}

impl Default for LinearConfig {
    fn default() -> Self {
        LinearConfig {
            alpha_shape: 1e-2,
            alpha_rate: 1e-4,
            fixed_alpha: None,
            alpha_init: 1.0,
            beta_init: 1.0,
            max_iters: 200,
            tol: 1e-6,
        }
    }
}

/// Gaussian posterior over expert weights plus the fitted noise precision.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpertPosterior {
    pub mean: DVector<f64>,
    pub covariance: DMatrix<f64>,
    /// Point-optimized noise precision `beta`.
    pub noise_precision: f64,
    /// Posterior mean of the weight precision `E[alpha]`.
    pub weight_precision: f64,
    pub basis: Basis,
    pub diagnostics: FitDiagnostics,
}

/// Predictive Gaussian of one expert, in mm/h and (mm/h)^2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianPrediction {
    pub mean: f64,
    pub variance: f64,
}

impl ExpertPosterior {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn predict(&self, x: &[f64]) -> Result<GaussianPrediction> {
        let phi = self.basis.apply(x)?;
        if phi.len() != self.dim() {
            return Err(invalid!("expert expects design dimension {}, got {}", self.dim(), phi.len()));
        }
        Ok(self.predict_design(&phi))
    }

    /// `N(m^T phi, 1/beta + phi^T S phi)`.
    pub fn predict_design(&self, phi: &DVector<f64>) -> GaussianPrediction {
        let weight_variance = (&self.covariance * phi).dot(phi).max(0.0);
        GaussianPrediction { mean: self.mean.dot(phi), variance: 1.0 / self.noise_precision + weight_variance }
    }
}

pub fn predict_expert(posterior: &ExpertPosterior, x: &[f64]) -> Result<GaussianPrediction> {
    posterior.predict(x)
}

/// Fit a variational Bayesian linear regression on an `N x D` design matrix.
pub fn fit_vb_linear(
    designs: &DMatrix<f64>,
    targets: &[f64],
    basis: Basis,
    config: &LinearConfig,
) -> Result<ExpertPosterior> {
    let (n, d) = designs.shape();
    if n == 0 {
        return Err(invalid!("linear fit needs at least one sample"));
    }
    if targets.len() != n {
        return Err(invalid!("{} targets for {n} design rows", targets.len()));
    }
    if basis.input_dim(d).is_none() {
        return Err(invalid!("design dimension {d} does not match basis {basis:?}"));
    }
    check_finite(targets, "linear targets")?;
    check_finite(designs.as_slice(), "linear designs")?;
    if let Some(a) = config.fixed_alpha {
        if !(a > 0.0 && a.is_finite()) {
            return Err(invalid!("fixed weight precision must be positive, got {a}"));
        }
    } else if !(config.alpha_shape > 0.0 && config.alpha_rate > 0.0) {
        return Err(invalid!("Gamma prior parameters must be positive"));
    }
    if !(config.alpha_init > 0.0 && config.alpha_init.is_finite()) {
        return Err(invalid!("initial weight precision must be positive, got {}", config.alpha_init));
    }
    if !(config.beta_init > 0.0 && config.beta_init.is_finite()) {
        return Err(invalid!("initial noise precision must be positive, got {}", config.beta_init));
    }

    let t = DVector::from_column_slice(targets);
    let gram = designs.tr_mul(designs);
    let proj = designs.tr_mul(&t);
    let nf = n as f64;
    let df = d as f64;

    let a0 = config.alpha_shape;
    let b0 = config.alpha_rate;
    let a_n = a0 + 0.5 * df;
    let mut b_n = b0;
    let mut alpha = config.fixed_alpha.unwrap_or(config.alpha_init);
    let mut beta = config.beta_init;

    let mut bounds: Vec<f64> = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    // Diagonalize the Gram matrix once; every precision alpha*I + beta*G then
    // shares its eigenvectors and inverts exactly even when G is rank deficient.
    let eigen = SymmetricEigen::new(gram.clone());
    let basis_vecs = eigen.eigenvectors;
    // Directions with round-off-level eigenvalues are null directions of the
    // design; the data projection has no component along them.
    let top = eigen.eigenvalues.iter().fold(0.0f64, |m, v| m.max(*v));
    let cutoff = top * df * f64::EPSILON * 16.0;
    let spectrum: Vec<f64> = eigen.eigenvalues.iter().map(|&v| if v > cutoff { v } else { 0.0 }).collect();
    let mut proj_rot = basis_vecs.tr_mul(&proj);
    for (p, l) in proj_rot.iter_mut().zip(&spectrum) {
        if *l == 0.0 {
            *p = 0.0;
        }
    }
    let posterior = |alpha: f64, beta: f64| -> Result<(DVector<f64>, DMatrix<f64>, f64)> {
        let inv: Vec<f64> = spectrum.iter().map(|l| 1.0 / (alpha + beta * l)).collect();
        if inv.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::Numerical(format!(
                "linear expert: posterior precision is not positive definite (alpha={alpha:e}, beta={beta:e})"
            )));
        }
        let scaled = DVector::from_iterator(d, proj_rot.iter().zip(&inv).map(|(p, v)| p * v * beta));
        let mean = &basis_vecs * scaled;
        let mut cov = &basis_vecs * DMatrix::from_diagonal(&DVector::from_column_slice(&inv)) * basis_vecs.transpose();
        symmetrize(&mut cov);
        Ok((mean, cov, inv.iter().map(|v| libm::log(*v)).sum()))
    };

    let (mut mean, mut cov, mut ln_det_cov);
    loop {
        iterations += 1;
        (mean, cov, ln_det_cov) = posterior(alpha, beta)?;
        let weight_sq = mean.dot(&mean) + cov.trace();

        if config.fixed_alpha.is_none() {
            b_n = b0 + 0.5 * weight_sq;
            alpha = a_n / b_n;
        }

        let resid = &t - designs * &mean;
        let spread = resid.dot(&resid) + (&gram * &cov).trace();
        beta = if spread > nf / MAX_NOISE_PRECISION { nf / spread } else { MAX_NOISE_PRECISION };

        let mut bound = 0.5 * nf * (libm::log(beta) - LN_2PI) - 0.5 * beta * spread;
        bound += 0.5 * ln_det_cov + 0.5 * df * (1.0 + LN_2PI);
        match config.fixed_alpha {
            Some(a) => {
                bound += 0.5 * df * (libm::log(a) - LN_2PI) - 0.5 * a * weight_sq;
            }
            None => {
                let e_ln_alpha = digamma(a_n) - libm::log(b_n);
                bound += -0.5 * df * LN_2PI + 0.5 * df * e_ln_alpha - 0.5 * alpha * weight_sq;
                bound += a0 * libm::log(b0) + (a0 - 1.0) * e_ln_alpha - b0 * alpha - ln_gamma(a0);
                bound += ln_gamma(a_n) - (a_n - 1.0) * digamma(a_n) - libm::log(b_n) + a_n;
            }
        }

        if let Some(&prev) = bounds.last() {
            let prev: f64 = prev;
            if libm::fabs(bound - prev) <= config.tol * libm::fabs(prev).max(1e-12) {
                converged = true;
            }
        }
        bounds.push(bound);
        if converged || iterations >= config.max_iters {
            break;
        }
    }

    // Refresh q(w) so the returned covariance matches the returned alpha and beta.
    (mean, cov, _) = posterior(alpha, beta)?;

    Ok(ExpertPosterior {
        mean,
        covariance: cov,
        noise_precision: beta,
        weight_precision: alpha,
        basis,
        diagnostics: FitDiagnostics { iterations, converged, lower_bounds: bounds },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_distr::{Distribution, Normal};

    fn design(xs: &[f64]) -> DMatrix<f64> {
        let rows: Vec<[f64; 1]> = xs.iter().map(|&x| [x]).collect();
        Basis::LinearWithBias.design_matrix(&rows).unwrap()
    }

    fn noiseless() -> ExpertPosterior {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x).collect();
        fit_vb_linear(&design(&xs), &ys, Basis::LinearWithBias, &LinearConfig::default()).unwrap()
    }

    #[test]
    fn matches_ridge_with_effective_regularization() {
        let post = noiseless();
        let x = design(&[1.0, 2.0, 3.0, 4.0]);
        let t = DVector::from_vec(alloc::vec![2.0, 4.0, 6.0, 8.0]);
        let lambda = post.weight_precision / post.noise_precision;
        let ridge = (DMatrix::identity(2, 2) * lambda + x.tr_mul(&x)).try_inverse().unwrap() * x.tr_mul(&t);
        for i in 0..2 {
            assert!((post.mean[i] - ridge[i]).abs() < 0.05, "coef {i}: {} vs {}", post.mean[i], ridge[i]);
        }
    }

    #[test]
    fn extrapolation_variance_grows() {
        let post = noiseless();
        let far = post.predict(&[10.0]).unwrap();
        let mid = post.predict(&[2.5]).unwrap();
        assert!((far.mean - 20.0).abs() < 0.2, "mean {}", far.mean);
        assert!(far.variance > mid.variance);
        // direct evaluation of 1/beta + phi^T S phi
        let phi = DVector::from_vec(alloc::vec![1.0, 10.0]);
        let direct = 1.0 / post.noise_precision + (phi.transpose() * &post.covariance * &phi)[(0, 0)];
        assert_relative_eq!(far.variance, direct, epsilon = 1e-12 * direct.max(1.0));
    }

    #[test]
    fn zero_targets_give_zero_mean() {
        let x = design(&[1.0, -1.0, 3.0, 0.5, 2.0]);
        let post = fit_vb_linear(&x, &[0.0; 5], Basis::LinearWithBias, &LinearConfig::default()).unwrap();
        assert!(post.mean.norm() < 1e-6);
    }

    #[test]
    fn recovers_noise_variance() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let noise = Normal::new(0.0, 0.5).unwrap();
        let xs: Vec<f64> = (0..200).map(|i| -2.0 + 4.0 * i as f64 / 199.0).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| x + noise.sample(&mut rng)).collect();
        let post = fit_vb_linear(&design(&xs), &ys, Basis::LinearWithBias, &LinearConfig::default()).unwrap();
        let var = 1.0 / post.noise_precision;
        assert!((0.125..=0.5).contains(&var), "noise variance {var}");
        for w in post.diagnostics.lower_bounds.windows(2) {
            assert!(w[1] >= w[0] - 1e-8 * w[0].abs().max(1.0), "bound decreased: {} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn huge_fixed_precision_shrinks_to_zero() {
        let xs: Vec<f64> = (0..30).map(|i| (i as f64 - 15.0) / 8.0).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 0.7 * x + 0.2).collect();
        let cfg = LinearConfig { fixed_alpha: Some(1e6), ..LinearConfig::default() };
        let post = fit_vb_linear(&design(&xs), &ys, Basis::LinearWithBias, &cfg).unwrap();
        assert!(post.mean.norm() < 1e-2, "norm {}", post.mean.norm());
    }

    #[test]
    fn variance_term_is_quadratic_in_design() {
        let post = ExpertPosterior {
            mean: DVector::from_vec(alloc::vec![0.3, -0.2]),
            covariance: DMatrix::from_row_slice(2, 2, &[0.5, 0.1, 0.1, 0.2]),
            noise_precision: 4.0,
            weight_precision: 1.0,
            basis: Basis::LinearWithBias,
            diagnostics: FitDiagnostics { iterations: 0, converged: true, lower_bounds: Vec::new() },
        };
        let phi = DVector::from_vec(alloc::vec![0.7, 1.3]);
        let one = post.predict_design(&phi).variance - 0.25;
        let two = post.predict_design(&(&phi * 2.0)).variance - 0.25;
        assert_relative_eq!(two, 4.0 * one, epsilon = 1e-12);
        assert!(one >= 0.0);
    }

    #[test]
    fn tiny_covariance_leaves_noise_floor() {
        let post = ExpertPosterior {
            mean: DVector::from_vec(alloc::vec![1.0, 2.0]),
            covariance: DMatrix::identity(2, 2) * 1e-300,
            noise_precision: 2.0,
            weight_precision: 1.0,
            basis: Basis::LinearWithBias,
            diagnostics: FitDiagnostics { iterations: 0, converged: true, lower_bounds: Vec::new() },
        };
        assert_relative_eq!(post.predict(&[3.0]).unwrap().variance, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn rejects_bad_input() {
        let x = design(&[1.0, 2.0]);
        assert!(fit_vb_linear(&x, &[1.0, f64::INFINITY], Basis::LinearWithBias, &LinearConfig::default()).is_err());
        let empty = DMatrix::<f64>::zeros(0, 2);
        assert!(fit_vb_linear(&empty, &[], Basis::LinearWithBias, &LinearConfig::default()).is_err());
    }
}

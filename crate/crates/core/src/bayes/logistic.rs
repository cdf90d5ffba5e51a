use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use nalgebra::{DMatrix, DVector};

use super::{check_finite, factor_precision, ln_det, symmetrize, Basis, FitDiagnostics};
use crate::error::{invalid, Result};
use crate::math::{ln_sigmoid, sigmoid};

/// Hyperparameters of a gate fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogisticConfig {
    /// Precision of the zero-mean isotropic Gaussian weight prior.
    pub prior_precision: f64,
    pub max_iters: usize,
    /// Relative lower-bound change that counts as converged.
    pub tol: f64,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        LogisticConfig { prior_precision: 1.0, max_iters: 200, tol: 1e-6 }
    }
}

/// Gaussian posterior over gate weights.
#[derive(Debug, Clone, PartialEq)]
pub struct GatePosterior {
    pub mean: DVector<f64>,
    pub covariance: DMatrix<f64>,
    /// Local variational parameters, one per training row.
    pub xi: Vec<f64>,
    pub basis: Basis,
    /// Set when every training label had the same value.
    pub degenerate: bool,
    pub diagnostics: FitDiagnostics,
}

impl GatePosterior {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// `P(z = True | x)` for raw (already standardized) features.
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        let phi = self.basis.apply(x)?;
        if phi.len() != self.dim() {
            return Err(invalid!("gate expects design dimension {}, got {}", self.dim(), phi.len()));
        }
        Ok(self.predict_design(&phi))
    }

    /// Probit-approximated predictive probability for an expanded design vector.
    pub fn predict_design(&self, phi: &DVector<f64>) -> f64 {
        let activation = self.mean.dot(phi);
        let variance = (&self.covariance * phi).dot(phi).max(0.0);
        sigmoid(kappa(variance) * activation)
    }
}

/// Jaakkola-Jordan coefficient `(sigmoid(xi) - 1/2) / (2 xi)`, with its limit 1/8 at 0.
pub fn lambda_jj(xi: f64) -> f64 {
    let xi = xi.abs();
    if xi < 1e-8 {
        0.125
    } else {
        // sigmoid(x) - 1/2 = tanh(x/2) / 2, without the cancellation
        libm::tanh(0.5 * xi) / (4.0 * xi)
    }
}

/// Probit scaling `(1 + pi s / 8)^(-1/2)` of the activation variance `s`.
pub fn kappa(activation_variance: f64) -> f64 {
    1.0 / libm::sqrt(1.0 + PI * activation_variance / 8.0)
}

/// Free-function form of [`GatePosterior::predict`].
pub fn predict_gate(posterior: &GatePosterior, x: &[f64]) -> Result<f64> {
    posterior.predict(x)
}

/// Fit a variational logistic regression on an `N x D` design matrix.
///
/// Alternates the Gaussian weight posterior given the local parameters `xi`
/// with the closed-form `xi` update until the relative bound change drops
/// below `config.tol`.
pub fn fit_vb_logistic(
    designs: &DMatrix<f64>,
    labels: &[bool],
    basis: Basis,
    config: &LogisticConfig,
) -> Result<GatePosterior> {
    let (n, d) = designs.shape();
    if n == 0 {
        return Err(invalid!("logistic fit needs at least one sample"));
    }
    if labels.len() != n {
        return Err(invalid!("{} labels for {n} design rows", labels.len()));
    }
    if !(config.prior_precision > 0.0 && config.prior_precision.is_finite()) {
        return Err(invalid!("prior precision must be positive, got {}", config.prior_precision));
    }
    if basis.input_dim(d).is_none() {
        return Err(invalid!("design dimension {d} does not match basis {basis:?}"));
    }
    check_finite(designs.as_slice(), "logistic designs")?;

    let positives = labels.iter().filter(|&&t| t).count();
    let degenerate = positives == 0 || positives == n;

    // b = sum_n (t_n - 1/2) phi_n, fixed across iterations
    let mut rhs = DVector::zeros(d);
    for (i, &t) in labels.iter().enumerate() {
        let w = if t { 0.5 } else { -0.5 };
        rhs.axpy(w, &designs.row(i).transpose(), 1.0);
    }

    let alpha = config.prior_precision;
    let mut xi = vec![1.0; n];
    let mut bounds = Vec::new();
    let mut converged = false;
    let mut mean;
    let mut covariance;
    let mut iterations = 0;

    loop {
        iterations += 1;
        let mut precision = DMatrix::from_diagonal_element(d, d, alpha);
        for (i, &x) in xi.iter().enumerate() {
            let row = designs.row(i).transpose();
            precision.ger(2.0 * lambda_jj(x), &row, &row, 1.0);
        }
        let chol = factor_precision(precision, "logistic gate")?;
        mean = chol.solve(&rhs);
        covariance = chol.inverse();
        symmetrize(&mut covariance);

        let local: f64 = xi.iter().map(|&x| ln_sigmoid(x) - 0.5 * x + lambda_jj(x) * x * x).sum();
        let bound = -0.5 * ln_det(&chol) + 0.5 * d as f64 * libm::log(alpha) + 0.5 * mean.dot(&rhs) + local;

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

        // xi_n^2 = phi_n^T (S + m m^T) phi_n
        let second_moment = &covariance + &mean * mean.transpose();
        for (i, x) in xi.iter_mut().enumerate() {
            let row = designs.row(i).transpose();
            *x = libm::sqrt((&second_moment * &row).dot(&row).max(0.0));
        }
    }

    Ok(GatePosterior {
        mean,
        covariance,
        xi,
        basis,
        degenerate,
        diagnostics: FitDiagnostics { iterations, converged, lower_bounds: bounds },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn design(xs: &[f64]) -> DMatrix<f64> {
        let rows: Vec<[f64; 1]> = xs.iter().map(|&x| [x]).collect();
        Basis::LinearWithBias.design_matrix(&rows).unwrap()
    }

    #[test]
    fn lambda_limits() {
        assert_eq!(lambda_jj(0.0), 0.125);
        // true value is 0.0025 - 2e-46, which rounds to 0.0025
        assert!(lambda_jj(100.0) <= 0.0025 && lambda_jj(100.0) > 0.0);
        assert!(lambda_jj(1000.0) < lambda_jj(100.0));
        assert_relative_eq!(lambda_jj(2.0), (sigmoid(2.0) - 0.5) / 4.0, epsilon = 1e-14);
        assert_relative_eq!(lambda_jj(2.0), 0.095_199_269_494_470_6, epsilon = 1e-12);
        // continuous across the series switch
        assert_relative_eq!(lambda_jj(0.999e-8), lambda_jj(1.001e-8), epsilon = 1e-14);
    }

    #[test]
    fn kappa_is_one_at_zero_and_decreasing() {
        assert_eq!(kappa(0.0), 1.0);
        let mut prev = 1.0;
        for i in 1..100 {
            let k = kappa(i as f64 * 0.1);
            assert!(k < prev);
            prev = k;
        }
    }

    #[test]
    fn symmetric_labels_give_zero_bias() {
        let x = design(&[-2.0, -1.0, 1.0, 2.0]);
        let t = [false, false, true, true];
        let post = fit_vb_logistic(&x, &t, Basis::LinearWithBias, &LogisticConfig::default()).unwrap();
        assert!(post.mean[1] > 0.0);
        assert!(post.mean[0].abs() < 0.1 * post.mean[1].abs());
        assert!(!post.degenerate);
        assert!(post.xi.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn lower_bound_is_monotone() {
        let xs: Vec<f64> = (0..40).map(|i| (i as f64 - 20.0) / 7.0).collect();
        let t: Vec<bool> = xs.iter().enumerate().map(|(i, &x)| x + 0.3 * ((i * 7 % 5) as f64 - 2.0) > 0.2).collect();
        let post = fit_vb_logistic(&design(&xs), &t, Basis::LinearWithBias, &LogisticConfig::default()).unwrap();
        for w in post.diagnostics.lower_bounds.windows(2) {
            assert!(w[1] >= w[0] - 1e-8, "bound decreased: {} -> {}", w[0], w[1]);
        }
        assert!(post.diagnostics.converged);
    }

    #[test]
    fn single_class_is_flagged_not_rejected() {
        let post =
            fit_vb_logistic(&design(&[1.0, 2.0, 3.0]), &[true; 3], Basis::LinearWithBias, &LogisticConfig::default())
                .unwrap();
        assert!(post.degenerate);
        assert!(post.predict(&[2.0]).unwrap() > 0.5);
    }

    #[test]
    fn empty_input_rejected() {
        let empty = DMatrix::<f64>::zeros(0, 2);
        assert!(fit_vb_logistic(&empty, &[], Basis::LinearWithBias, &LogisticConfig::default()).is_err());
    }

    #[test]
    fn zero_mean_predicts_one_half() {
        let post = GatePosterior {
            mean: DVector::zeros(3),
            covariance: DMatrix::identity(3, 3) * 5.0,
            xi: Vec::new(),
            basis: Basis::LinearWithBias,
            degenerate: false,
            diagnostics: FitDiagnostics { iterations: 0, converged: true, lower_bounds: Vec::new() },
        };
        assert_eq!(post.predict(&[3.0, -7.0]).unwrap(), 0.5);
    }
}

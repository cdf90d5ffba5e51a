//! Variational Bayesian node models.
//!
//! Gates are binary logistic regressions trained with the Jaakkola-Jordan
//! quadratic bound on the sigmoid; experts are linear regressions with a
//! Gamma hyperprior on the weight precision and a point-optimized noise
//! precision. Both keep a full Gaussian posterior over the weights, which is
//! what the predictive formulas integrate over.

mod basis;
mod linear;
mod logistic;

pub use basis::{apply_basis, Basis};
pub use linear::{fit_vb_linear, predict_expert, ExpertPosterior, GaussianPrediction, LinearConfig};
pub use logistic::{fit_vb_logistic, kappa, lambda_jj, predict_gate, GatePosterior, LogisticConfig};

use alloc::format;
use alloc::vec::Vec;
use nalgebra::{Cholesky, DMatrix, Dyn};

use crate::error::{Error, Result};

/// Convergence record kept alongside every fitted posterior.
#[derive(Debug, Clone, PartialEq)]
pub struct FitDiagnostics {
    pub iterations: usize,
    pub converged: bool,
    /// Variational lower bound after each sweep.
    pub lower_bounds: Vec<f64>,
}

impl FitDiagnostics {
    pub fn final_bound(&self) -> f64 {
        self.lower_bounds.last().copied().unwrap_or(f64::NEG_INFINITY)
    }
}

/// Cholesky of a precision matrix, with condition diagnostics on failure.
pub(crate) fn factor_precision(precision: DMatrix<f64>, what: &str) -> Result<Cholesky<f64, Dyn>> {
    let diag = precision.diagonal();
    let (lo, hi) = diag.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    Cholesky::new(precision).ok_or_else(|| {
        Error::Numerical(format!(
            "{what}: posterior precision is not positive definite (diagonal range [{lo:e}, {hi:e}])"
        ))
    })
}

/// `ln |A|` from the Cholesky factor of `A`.
pub(crate) fn ln_det(chol: &Cholesky<f64, Dyn>) -> f64 {
    2.0 * chol.l_dirty().diagonal().iter().map(|v| libm::log(*v)).sum::<f64>()
}

/// Symmetrize in place; inverses from Cholesky can drift by an ulp.
pub(crate) fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

pub fn check_finite(x: &[f64], what: &str) -> Result<()> {
    match x.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(Error::InvalidInput(format!("{what}: element {i} is not finite"))),
        None => Ok(()),
    }
}

use alloc::vec::Vec;

use crate::bayes::GaussianPrediction;
use crate::error::{invalid, Result};
use crate::math::{normal_cdf, normal_pdf};

/// Band used to turn the predictive mixture into an error probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorMargin {
    /// Relative half-width around the point estimate.
    pub fraction: f64,
    /// Optional absolute minimum half-width in mm/h; 0 disables it.
    pub floor: f64,
}

impl Default for ErrorMargin {
    fn default() -> Self {
        ErrorMargin { fraction: 0.05, floor: 0.0 }
    }
}

impl ErrorMargin {
    pub fn validate(&self) -> Result<()> {
        if !(self.fraction >= 0.0 && self.fraction.is_finite() && self.floor >= 0.0 && self.floor.is_finite()) {
            return Err(invalid!(
                "error margin must be non-negative (fraction {}, floor {})",
                self.fraction,
                self.floor
            ));
        }
        Ok(())
    }

    /// Half-width of the band around `estimate`.
    pub fn half_width(&self, estimate: f64) -> f64 {
        (self.fraction * libm::fabs(estimate)).max(self.floor)
    }
}

/// Gaussian-mixture predictive distribution over the rainfall rate.
#[derive(Debug, Clone, PartialEq)]
pub struct MixturePrediction {
    /// Probability of each expert, summing to one.
    pub responsibilities: Vec<f64>,
    pub components: Vec<GaussianPrediction>,
    pub point_estimate: f64,
    pub error_probability: f64,
}

impl MixturePrediction {
    pub fn new(responsibilities: Vec<f64>, components: Vec<GaussianPrediction>, margin: &ErrorMargin) -> Result<Self> {
        if responsibilities.is_empty() || responsibilities.len() != components.len() {
            return Err(invalid!("{} responsibilities for {} components", responsibilities.len(), components.len()));
        }
        if responsibilities.iter().any(|p| !(*p >= 0.0 && *p <= 1.0 + 1e-12)) {
            return Err(invalid!("responsibilities must lie in [0, 1]"));
        }
        let total: f64 = responsibilities.iter().sum();
        if libm::fabs(total - 1.0) > 1e-9 {
            return Err(invalid!("responsibilities sum to {total}, not 1"));
        }
        if components.iter().any(|c| !(c.variance > 0.0 && c.mean.is_finite() && c.variance.is_finite())) {
            return Err(invalid!("component variances must be positive and finite"));
        }
        margin.validate()?;
        let mut pred = MixturePrediction { responsibilities, components, point_estimate: 0.0, error_probability: 1.0 };
        pred.point_estimate = pred.mean();
        pred.error_probability = pred.error_probability_with(margin);
        Ok(pred)
    }

    /// Mixture mean `sum P_m mu_m`.
    pub fn mean(&self) -> f64 {
        self.weighted().map(|(p, c)| p * c.mean).sum()
    }

    pub fn variance(&self) -> f64 {
        let mean = self.mean();
        self.weighted().map(|(p, c)| p * (c.variance + (c.mean - mean) * (c.mean - mean))).sum()
    }

    pub fn density(&self, y: f64) -> f64 {
        self.weighted().map(|(p, c)| p * normal_pdf(y, c.mean, c.variance)).sum()
    }

    pub fn cdf(&self, y: f64) -> f64 {
        self.weighted().map(|(p, c)| p * normal_cdf(y, c.mean, c.variance)).sum()
    }

    /// Probability mass in `[a, b]`, summed per component to avoid cancellation in `1 - F`.
    pub fn mass_between(&self, a: f64, b: f64) -> f64 {
        self.weighted().map(|(p, c)| p * (normal_cdf(b, c.mean, c.variance) - normal_cdf(a, c.mean, c.variance))).sum()
    }

    /// Probability that the true rate falls outside the margin band around the point estimate.
    pub fn error_probability_with(&self, margin: &ErrorMargin) -> f64 {
        let y = self.point_estimate;
        let half = margin.half_width(y);
        (1.0 - self.mass_between(y - half, y + half)).clamp(0.0, 1.0)
    }

    fn weighted(&self) -> impl Iterator<Item = (f64, &GaussianPrediction)> {
        self.responsibilities.iter().copied().zip(self.components.iter())
    }
}

pub fn mixture_density(pred: &MixturePrediction, y: f64) -> f64 {
    pred.density(y)
}

pub fn point_estimate(pred: &MixturePrediction) -> f64 {
    pred.mean()
}

pub fn error_probability(pred: &MixturePrediction, margin: &ErrorMargin) -> f64 {
    pred.error_probability_with(margin)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use approx::assert_relative_eq;

    fn g(mean: f64, variance: f64) -> GaussianPrediction {
        GaussianPrediction { mean, variance }
    }

    fn mix(p: &[f64], c: &[(f64, f64)]) -> MixturePrediction {
        MixturePrediction::new(p.to_vec(), c.iter().map(|&(m, v)| g(m, v)).collect(), &ErrorMargin::default()).unwrap()
    }

    #[test]
    fn single_component_peak() {
        let m = mix(&[1.0], &[(10.0, 4.0)]);
        assert_relative_eq!(mixture_density(&m, 10.0), 0.199_471_140_200_716_34, epsilon = 1e-12);
        assert_eq!(point_estimate(&m), 10.0);
    }

    #[test]
    fn symmetric_pair() {
        let m = mix(&[0.5, 0.5], &[(0.0, 1.0), (10.0, 1.0)]);
        assert_relative_eq!(m.density(5.0), 1.486_719_514_734_297_7e-6, max_relative = 1e-10);
        assert_eq!(m.point_estimate, 5.0);
        let m = mix(&[0.5, 0.5], &[(10.0, 1.0), (20.0, 1.0)]);
        assert_eq!(m.point_estimate, 15.0);
        assert_eq!(mix(&[1.0], &[(12.5, 1.0)]).point_estimate, 12.5);
    }

    #[test]
    fn one_sigma_band() {
        let m = mix(&[1.0], &[(100.0, 25.0)]);
        assert_relative_eq!(m.error_probability, 0.317_310_507_862_914_1, epsilon = 1e-9);
    }

    #[test]
    fn vanishing_variance_means_no_error() {
        let m = mix(&[1.0], &[(30.0, 1e-10)]);
        assert!(m.error_probability < 1e-12);
    }

    #[test]
    fn zero_estimate_uses_floor() {
        let m = mix(&[1.0], &[(0.0, 1.0)]);
        assert_eq!(m.error_probability, 1.0);
        let floored = m.error_probability_with(&ErrorMargin { fraction: 0.05, floor: 1.0 });
        assert_relative_eq!(floored, 0.317_310_507_862_914_1, epsilon = 1e-9);
    }

    #[test]
    fn rejects_invalid_parts() {
        assert!(
            MixturePrediction::new(vec![0.5, 0.4], vec![g(0.0, 1.0), g(1.0, 1.0)], &ErrorMargin::default()).is_err()
        );
        assert!(MixturePrediction::new(vec![1.0], vec![g(0.0, 0.0)], &ErrorMargin::default()).is_err());
        assert!(MixturePrediction::new(vec![], vec![], &ErrorMargin::default()).is_err());
    }
}

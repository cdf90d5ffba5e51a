use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, Result};

/// Crop half extent (metres) at which the count curves are specified.
pub const REFERENCE_EXTENT: f64 = 10.0;

/// Noise behaviour over one rate interval `[lo, upper)`, with `lo` the
/// previous regime's upper bound. Curves use the local offset `d = r - lo`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Regime {
    pub upper: f64,
    /// Expected point count `c0 + c1 d + c2 d^2` in the reference box.
    pub count: [f64; 3],
    /// Log-intensity decline per mm/h.
    pub intensity_decay: f64,
    /// Radial exponent `g0 + g1 d`; above 1 pulls points towards the sensor.
    pub radial_shape: [f64; 2],
    /// Share of points placed in droplet clusters.
    pub cluster_fraction: f64,
    /// Per-axis standard deviation of a cluster, metres.
    pub cluster_scale: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseRegimeParams {
    pub regimes: Vec<Regime>,
    /// Median intensity of a dry scan.
    pub intensity_max: f64,
    /// Log-space spread of point intensities.
    pub intensity_sigma: f64,
    /// Mean number of points per droplet cluster.
    pub cluster_size: f64,
}

impl Default for NoiseRegimeParams {
    fn default() -> Self {
        NoiseRegimeParams {
            regimes: vec![
                Regime {
                    upper: 10.0,
                    count: [5.0, 6.0, 0.5],
                    intensity_decay: 0.040,
                    radial_shape: [1.0, 0.04],
                    cluster_fraction: 0.05,
                    cluster_scale: 0.6,
                },
                Regime {
                    upper: 20.0,
                    count: [115.0, 1.0, -0.02],
                    intensity_decay: 0.030,
                    radial_shape: [1.4, 0.04],
                    cluster_fraction: 0.20,
                    cluster_scale: 0.4,
                },
                Regime {
                    upper: 40.0,
                    count: [123.0, 4.5, 0.05],
                    intensity_decay: 0.020,
                    radial_shape: [1.9, 0.02],
                    cluster_fraction: 0.35,
                    cluster_scale: 0.25,
                },
                Regime {
                    upper: f64::INFINITY,
                    count: [233.0, 0.8, -0.005],
                    intensity_decay: 0.015,
                    radial_shape: [2.5, 0.01],
                    cluster_fraction: 0.50,
                    cluster_scale: 0.15,
                },
            ],
            intensity_max: 100.0,
            intensity_sigma: 0.35,
            cluster_size: 6.0,
        }
    }
}

impl NoiseRegimeParams {
    pub fn validate(&self) -> Result<()> {
        if self.regimes.is_empty() {
            return Err(invalid!("at least one noise regime is required"));
        }
        let mut lo = 0.0;
        for (i, r) in self.regimes.iter().enumerate() {
            if !(r.upper > lo) {
                return Err(invalid!("regime {i} upper bound {} must exceed {lo}", r.upper));
            }
            if !(r.cluster_scale > 0.0 && r.cluster_scale.is_finite()) {
                return Err(invalid!("regime {i} cluster scale must be positive"));
            }
            if !(0.0..=1.0).contains(&r.cluster_fraction) {
                return Err(invalid!("regime {i} cluster fraction must lie in [0, 1]"));
            }
            if r.count.iter().chain(&r.radial_shape).any(|v| !v.is_finite()) || !r.intensity_decay.is_finite() {
                return Err(invalid!("regime {i} has non-finite coefficients"));
            }
            lo = r.upper;
        }
        if !(self.intensity_max > 0.0 && self.intensity_sigma > 0.0 && self.cluster_size > 0.0) {
            return Err(invalid!("intensity scale, intensity spread and cluster size must be positive"));
        }
        Ok(())
    }

    /// Regime index and its lower bound for a rate. Rates past the last
    /// bound use the last regime.
    pub fn regime(&self, rate: f64) -> (usize, f64) {
        let mut lo = 0.0;
        for (i, r) in self.regimes.iter().enumerate() {
            if rate < r.upper || i + 1 == self.regimes.len() {
                return (i, lo);
            }
            lo = r.upper;
        }
        unreachable!("regimes are non-empty")
    }

    /// Expected points in a box of the given half extent.
    pub fn expected_count(&self, rate: f64, half_extent: f64) -> f64 {
        let (i, lo) = self.regime(rate);
        let d = rate - lo;
        let c = self.regimes[i].count;
        let base = (c[0] + c[1] * d + c[2] * d * d).max(0.0);
        let s = half_extent / REFERENCE_EXTENT;
        base * s * s * s
    }

    /// Median point intensity, continuous in the rate.
    pub fn median_intensity(&self, rate: f64) -> f64 {
        let mut lo = 0.0;
        let mut log_drop = 0.0;
        for (i, r) in self.regimes.iter().enumerate() {
            let hi = if i + 1 == self.regimes.len() { f64::INFINITY } else { r.upper };
            let span = rate.min(hi) - lo;
            if span > 0.0 {
                log_drop += r.intensity_decay * span;
            }
            if rate < hi {
                break;
            }
            lo = hi;
        }
        self.intensity_max * libm::exp(-log_drop)
    }

    pub fn radial_exponent(&self, rate: f64) -> f64 {
        let (i, lo) = self.regime(rate);
        let g = self.regimes[i].radial_shape;
        (g[0] + g[1] * (rate - lo)).max(0.05)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn count_curve_is_continuous_with_regime_slopes() {
        let p = NoiseRegimeParams::default();
        p.validate().unwrap();
        assert_eq!(p.expected_count(0.0, 10.0), 5.0);
        for b in [10.0, 20.0, 40.0] {
            let below = p.expected_count(b - 1e-9, 10.0);
            let above = p.expected_count(b, 10.0);
            assert!((below - above).abs() < 1e-6, "{b}: {below} vs {above}");
        }
        assert!((p.expected_count(30.0, 5.0) - p.expected_count(30.0, 10.0) / 8.0).abs() < 1e-12);
    }

    #[test]
    fn intensity_decays() {
        let p = NoiseRegimeParams::default();
        assert_eq!(p.median_intensity(0.0), 100.0);
        let mut prev = f64::INFINITY;
        for k in 0..100 {
            let v = p.median_intensity(k as f64);
            assert!(v < prev);
            prev = v;
        }
        let a = p.median_intensity(20.0 - 1e-9);
        let b = p.median_intensity(20.0);
        assert!((a - b).abs() < 1e-6);
    }

    #[test]
    fn regime_lookup() {
        let p = NoiseRegimeParams::default();
        assert_eq!(p.regime(0.0), (0, 0.0));
        assert_eq!(p.regime(10.0), (1, 10.0));
        assert_eq!(p.regime(39.9), (2, 20.0));
        assert_eq!(p.regime(400.0), (3, 40.0));
        let mut bad = p.clone();
        bad.regimes[1].upper = 5.0;
        assert!(bad.validate().is_err());
    }
}

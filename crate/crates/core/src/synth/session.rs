use alloc::vec::Vec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Normal, Poisson, StandardNormal};

use super::NoiseRegimeParams;
use crate::error::{invalid, Result};
use crate::features::{CropBox, Point, Scan};
use crate::math::derive_seed;
use crate::pipeline::RainSeries;

const SCAN_STREAM: u64 = 1;
const FLUCTUATION_STREAM: u64 = 2;
const DISDROMETER_STREAM: u64 = 3;

/// One experiment segment: hold `rate` for `duration` seconds after a linear
/// ramp of `ramp` seconds from the previous segment's rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentPlan {
    pub duration: f64,
    pub rate: f64,
    pub ramp: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorConfig {
    pub frame_rate: f64,
    pub disdrometer_rate: f64,
    /// Log-space spread of the multiplicative disdrometer error. The default
    /// 0.03 puts 90 % of readings within ±5 % of the true rate.
    pub disdrometer_sigma: f64,
    /// Multiplicative disdrometer bias, 1 for none.
    pub disdrometer_bias: f64,
}

impl Default for SensorConfig {
    fn default() -> Self {
        SensorConfig { frame_rate: 10.0, disdrometer_rate: 0.1, disdrometer_sigma: 0.03, disdrometer_bias: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RainProfile {
    pub segments: Vec<SegmentPlan>,
    pub sensor: SensorConfig,
    /// Stationary log-space spread of the true rate around the plan.
    pub fluctuation_sd: f64,
    /// Correlation time of that fluctuation, seconds.
    pub fluctuation_tau: f64,
}

impl Default for RainProfile {
    /// 25 minutes: three 500 s segments at 15, 30 and 50 mm/h, each entered
    /// by a 250 s ramp from the previous rate (from dry for the first).
    fn default() -> Self {
        let segments =
            [15.0, 30.0, 50.0].iter().map(|&rate| SegmentPlan { duration: 500.0, rate, ramp: 250.0 }).collect();
        RainProfile { segments, sensor: SensorConfig::default(), fluctuation_sd: 0.03, fluctuation_tau: 60.0 }
    }
}

impl RainProfile {
    pub fn constant(rate: f64, duration: f64) -> Self {
        RainProfile { segments: alloc::vec![SegmentPlan { duration, rate, ramp: 0.0 }], ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.segments.is_empty() {
            return Err(invalid!("rain profile has no segments"));
        }
        for (i, s) in self.segments.iter().enumerate() {
            if !(s.duration > 0.0 && s.duration.is_finite()) {
                return Err(invalid!("segment {i} duration must be positive, got {}", s.duration));
            }
            if !(s.rate >= 0.0 && s.rate.is_finite()) {
                return Err(invalid!("segment {i} rate must be non-negative, got {}", s.rate));
            }
            if !(s.ramp >= 0.0 && s.ramp <= s.duration) {
                return Err(invalid!("segment {i} ramp must lie in [0, duration], got {}", s.ramp));
            }
        }
        let c = &self.sensor;
        if !(c.frame_rate > 0.0 && c.disdrometer_rate > 0.0 && c.disdrometer_bias > 0.0 && c.disdrometer_sigma >= 0.0) {
            return Err(invalid!("sensor rates and bias must be positive and noise non-negative"));
        }
        if !(self.fluctuation_sd >= 0.0 && self.fluctuation_tau > 0.0) {
            return Err(invalid!("fluctuation spread must be non-negative and its time constant positive"));
        }
        Ok(())
    }

    pub fn total_duration(&self) -> f64 {
        self.segments.iter().map(|s| s.duration).sum()
    }

    pub fn frame_count(&self) -> usize {
        libm::round(self.total_duration() * self.sensor.frame_rate) as usize
    }

    /// Planned rate and segment index at time `t`.
    pub fn planned_rate(&self, t: f64) -> (f64, usize) {
        let mut start = 0.0;
        let mut prev = 0.0;
        for (i, s) in self.segments.iter().enumerate() {
            if t < start + s.duration || i + 1 == self.segments.len() {
                let into = t - start;
                let r = if s.ramp > 0.0 && into < s.ramp { prev + (s.rate - prev) * into / s.ramp } else { s.rate };
                return (r.max(0.0), i);
            }
            start += s.duration;
            prev = s.rate;
        }
        unreachable!("profile is non-empty")
    }
}

/// A session's rate trajectory; scans are produced on demand per frame.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionPlan {
    pub profile: RainProfile,
    pub params: NoiseRegimeParams,
    pub half_extent: f64,
    pub seed: u64,
    /// True rate at each lidar frame.
    pub true_rates: Vec<f64>,
    /// Raw disdrometer samples.
    pub series: RainSeries,
}

impl SessionPlan {
    pub fn new(profile: &RainProfile, params: &NoiseRegimeParams, half_extent: f64, seed: u64) -> Result<Self> {
        profile.validate()?;
        params.validate()?;
        CropBox::new(half_extent)?;
        let frames = profile.frame_count();
        let dt = 1.0 / profile.sensor.frame_rate;

        // Ornstein-Uhlenbeck log-fluctuation sampled on the frame clock.
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, FLUCTUATION_STREAM));
        let decay = libm::exp(-dt / profile.fluctuation_tau);
        let kick = profile.fluctuation_sd * libm::sqrt(1.0 - decay * decay);
        let sd = profile.fluctuation_sd;
        let mut x: f64 = if sd > 0.0 { sd * rng.sample::<f64, _>(StandardNormal) } else { 0.0 };
        let mut true_rates = Vec::with_capacity(frames);
        for i in 0..frames {
            if i > 0 {
                x = x * decay + kick * rng.sample::<f64, _>(StandardNormal);
            }
            let (planned, _) = profile.planned_rate(i as f64 * dt);
            true_rates.push(planned * libm::exp(x - 0.5 * sd * sd));
        }

        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, DISDROMETER_STREAM));
        let c = profile.sensor;
        let samples = libm::floor(profile.total_duration() * c.disdrometer_rate + 1e-9) as usize;
        let mut series = RainSeries::empty();
        for j in 0..samples {
            let t = j as f64 / c.disdrometer_rate;
            let frame = (libm::round(t * c.frame_rate) as usize).min(frames.saturating_sub(1));
            let noise = if c.disdrometer_sigma > 0.0 {
                libm::exp(
                    c.disdrometer_sigma * rng.sample::<f64, _>(StandardNormal)
                        - 0.5 * c.disdrometer_sigma * c.disdrometer_sigma,
                )
            } else {
                1.0
            };
            series.timestamps.push(t);
            series.rates.push(true_rates[frame] * noise * c.disdrometer_bias);
            series.segment_ids.push(profile.planned_rate(t).1 as i64);
        }
        series.validate()?;
        Ok(SessionPlan { profile: profile.clone(), params: params.clone(), half_extent, seed, true_rates, series })
    }

    pub fn frame_count(&self) -> usize {
        self.true_rates.len()
    }

    pub fn timestamp(&self, frame: usize) -> f64 {
        frame as f64 / self.profile.sensor.frame_rate
    }

    /// Scan of lidar frame `frame`, independent of every other frame.
    pub fn scan(&self, frame: usize) -> Scan {
        let seed = derive_seed(derive_seed(self.seed, SCAN_STREAM), frame as u64);
        let mut scan = generate_scan(self.true_rates[frame], &self.params, self.half_extent, seed);
        scan.frame_id = frame as u64;
        scan.timestamp = self.timestamp(frame);
        scan
    }
}

/// Scans plus raw disdrometer samples of one synthetic session.
#[derive(Debug, Clone, PartialEq)]
pub struct Session {
    pub scans: Vec<Scan>,
    pub series: RainSeries,
    pub true_rates: Vec<f64>,
}

pub fn generate_session(
    profile: &RainProfile,
    params: &NoiseRegimeParams,
    half_extent: f64,
    seed: u64,
) -> Result<Session> {
    let plan = SessionPlan::new(profile, params, half_extent, seed)?;
    let scans = (0..plan.frame_count()).map(|i| plan.scan(i)).collect();
    Ok(Session { scans, series: plan.series, true_rates: plan.true_rates })
}

fn uniform_symmetric(rng: &mut ChaCha8Rng) -> f64 {
    rng.random::<f64>() * 2.0 - 1.0
}

/// One noise scan at `rate` inside a cube of half extent `half_extent`.
///
/// Negative or non-finite rates are treated as dry.
pub fn generate_scan(rate: f64, params: &NoiseRegimeParams, half_extent: f64, seed: u64) -> Scan {
    let rate = if rate.is_finite() { rate.max(0.0) } else { 0.0 };
    let h = half_extent;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lambda = params.expected_count(rate, h);
    let n = if lambda > 0.0 { Poisson::new(lambda).map(|d| d.sample(&mut rng) as usize).unwrap_or(0) } else { 0 };
    let (ri, _) = params.regime(rate);
    let regime = params.regimes[ri];
    let gamma = params.radial_exponent(rate);
    let intensity = LogNormal::new(libm::log(params.median_intensity(rate)), params.intensity_sigma)
        .expect("validated intensity parameters");
    let cluster_offset = Normal::new(0.0, regime.cluster_scale).expect("validated cluster scale");

    let clustered: Vec<bool> = (0..n).map(|_| rng.random::<f64>() < regime.cluster_fraction).collect();
    let n_cluster = clustered.iter().filter(|c| **c).count();
    let k = libm::ceil(n_cluster as f64 / params.cluster_size) as usize;
    let centres: Vec<[f64; 3]> =
        (0..k).map(|_| core::array::from_fn(|_| 0.9 * h * uniform_symmetric(&mut rng))).collect();

    let mut points = Vec::with_capacity(n);
    for &in_cluster in &clustered {
        let pos: [f64; 3] = if in_cluster {
            let c = centres[rng.random_range(0..k)];
            core::array::from_fn(|a| (c[a] + cluster_offset.sample(&mut rng)).clamp(-h, h))
        } else {
            let v: [f64; 3] = core::array::from_fn(|_| uniform_symmetric(&mut rng));
            let m = v.iter().fold(0.0f64, |m, x| m.max(libm::fabs(*x)));
            let s = if m > 0.0 { libm::pow(m, gamma - 1.0) } else { 0.0 };
            core::array::from_fn(|a| (h * v[a] * s).clamp(-h, h))
        };
        points.push(Point::new(pos[0], pos[1], pos[2], intensity.sample(&mut rng)));
    }
    Scan { frame_id: 0, timestamp: 0.0, points }
}

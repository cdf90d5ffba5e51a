//! Scalar helpers that `core` does not provide.

use core::f64::consts::{PI, SQRT_2};

pub const LN_2PI: f64 = 1.837_877_066_409_345_3;

/// Logistic sigmoid, evaluated without overflow for large |x|.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + libm::exp(-x))
    } else {
        let e = libm::exp(x);
        e / (1.0 + e)
    }
}

/// `ln(sigmoid(x))`.
pub fn ln_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -libm::log1p(libm::exp(-x))
    } else {
        x - libm::log1p(libm::exp(x))
    }
}

pub fn normal_pdf(x: f64, mean: f64, variance: f64) -> f64 {
    let z = x - mean;
    libm::exp(-0.5 * z * z / variance) / libm::sqrt(2.0 * PI * variance)
}

pub fn normal_cdf(x: f64, mean: f64, variance: f64) -> f64 {
    0.5 * libm::erfc(-(x - mean) / (SQRT_2 * libm::sqrt(variance)))
}

pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// Digamma function for `x > 0` via recurrence and the asymptotic series.
pub fn digamma(mut x: f64) -> f64 {
    let mut acc = 0.0;
    while x < 10.0 {
        acc -= 1.0 / x;
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    acc + libm::log(x)
        - 0.5 * inv
        - inv2 * (1.0 / 12.0 - inv2 * (1.0 / 120.0 - inv2 * (1.0 / 252.0 - inv2 * (1.0 / 240.0 - inv2 / 132.0))))
}

/// SplitMix64 finalizer; used to fan a single seed out into independent streams.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed.wrapping_add(0x9E37_79B9_7F4A_7C15).wrapping_add(stream.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

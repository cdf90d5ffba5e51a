use alloc::vec::Vec;
use nalgebra::DMatrix;

use crate::error::{invalid, Result};

/// Least-squares polynomial smoothing weights.
///
/// Row `j` of the returned `window x window` matrix evaluates the fitted
/// polynomial at offset `j - half` from the window centre.
pub fn savgol_weights(window: usize, order: usize) -> Result<DMatrix<f64>> {
    if window % 2 == 0 || window == 0 {
        return Err(invalid!("Savitzky-Golay window must be odd, got {window}"));
    }
    if order >= window {
        return Err(invalid!("polynomial order {order} must be below window length {window}"));
    }
    let half = (window / 2) as f64;
    // offsets scaled to [-1, 1] keep the Vandermonde well conditioned
    let scale = if half > 0.0 { half } else { 1.0 };
    let vander = DMatrix::from_fn(window, order + 1, |i, k| libm::pow((i as f64 - half) / scale, k as f64));
    let gram = vander.tr_mul(&vander);
    let chol = gram.cholesky().ok_or_else(|| invalid!("Savitzky-Golay normal equations are singular"))?;
    let solve = chol.solve(&vander.transpose());
    Ok(&vander * solve)
}

/// Savitzky-Golay filter. Edge samples use the polynomial of the first or
/// last full window, so the output has the input's length.
pub fn savgol(series: &[f64], window: usize, order: usize) -> Result<Vec<f64>> {
    let hat = savgol_weights(window, order)?;
    let n = series.len();
    if n < window {
        return Err(invalid!("series of length {n} is shorter than the filter window {window}"));
    }
    let half = window / 2;
    let row = |r: usize, start: usize| -> f64 { (0..window).map(|j| hat[(r, j)] * series[start + j]).sum() };
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let v = if i < half {
            row(i, 0)
        } else if i + half >= n {
            row(window - (n - i), n - window)
        } else {
            row(half, i - half)
        };
        out.push(v);
    }
    Ok(out)
}

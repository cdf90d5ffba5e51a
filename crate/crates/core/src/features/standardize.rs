use alloc::vec::Vec;

use crate::error::{invalid, Result};

/// Per-dimension z-scoring fitted on a training set.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardization {
    pub mean: Vec<f64>,
    /// Population standard deviation; 1 for constant dimensions.
    pub scale: Vec<f64>,
}

impl Standardization {
    /// Returns the fitted statistics and the indices of zero-variance dimensions.
    pub fn fit<R: AsRef<[f64]>>(rows: &[R]) -> Result<(Self, Vec<usize>)> {
        if rows.len() < 2 {
            return Err(invalid!("standardization needs at least 2 samples, got {}", rows.len()));
        }
        let dim = rows[0].as_ref().len();
        if rows.iter().any(|r| r.as_ref().len() != dim) {
            return Err(invalid!("standardization rows have inconsistent lengths"));
        }
        let n = rows.len() as f64;
        let mut mean = alloc::vec![0.0; dim];
        for r in rows {
            for (m, v) in mean.iter_mut().zip(r.as_ref()) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = alloc::vec![0.0; dim];
        for r in rows {
            for ((s, v), m) in var.iter_mut().zip(r.as_ref()).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let mut constant = Vec::new();
        let scale = var
            .into_iter()
            .enumerate()
            .map(|(k, s)| {
                let sd = libm::sqrt(s / n);
                if sd > 1e-12 * (1.0 + libm::fabs(mean[k])) {
                    sd
                } else {
                    constant.push(k);
                    1.0
                }
            })
            .collect();
        Ok((Standardization { mean, scale }, constant))
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check(x)?;
        Ok(x.iter().zip(&self.mean).zip(&self.scale).map(|((v, m), s)| (v - m) / s).collect())
    }

    pub fn invert(&self, z: &[f64]) -> Result<Vec<f64>> {
        self.check(z)?;
        Ok(z.iter().zip(&self.mean).zip(&self.scale).map(|((v, m), s)| v * s + m).collect())
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(invalid!("feature vector has {} dimensions, standardization expects {}", x.len(), self.dim()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn zero_mean_unit_sd() {
        let rows = vec![[1.0, 10.0, 5.0], [2.0, 30.0, 5.0], [4.0, 20.0, 5.0], [9.0, 0.0, 5.0]];
        let (st, constant) = Standardization::fit(&rows).unwrap();
        assert_eq!(constant, vec![2]);
        let z: Vec<Vec<f64>> = rows.iter().map(|r| st.apply(r).unwrap()).collect();
        for k in 0..3 {
            let mean = z.iter().map(|r| r[k]).sum::<f64>() / 4.0;
            let var = z.iter().map(|r| (r[k] - mean).powi(2)).sum::<f64>() / 4.0;
            assert!(mean.abs() < 1e-9);
            if k < 2 {
                assert!((var.sqrt() - 1.0).abs() < 1e-9);
            } else {
                assert_eq!(z[0][k], 0.0);
            }
        }
        let v = [3.3, -7.1, 5.5];
        let back = st.invert(&st.apply(&v).unwrap()).unwrap();
        for (a, b) in back.iter().zip(&v) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_small_or_ragged_input() {
        assert!(Standardization::fit(&[[1.0]]).is_err());
        let (st, _) = Standardization::fit(&[[1.0, 2.0], [2.0, 3.0]]).unwrap();
        assert!(st.apply(&[1.0]).is_err());
    }
}

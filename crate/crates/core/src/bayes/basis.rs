use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};

use super::check_finite;
use crate::error::{invalid, Result};

/// Basis expansion applied to standardized features before every node fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Basis {
    /// `[1, x_1, ..., x_F]`
    #[default]
    LinearWithBias,
    /// `[1, x_1, ..., x_F, x_1^2, ..., x_F^2, ...]` up to `degree`.
    Polynomial { degree: usize },
}

impl Basis {
    pub fn degree(&self) -> usize {
        match *self {
            Basis::LinearWithBias => 1,
            Basis::Polynomial { degree } => degree,
        }
    }

    /// Design dimension `D = 1 + F * degree`.
    pub fn output_dim(&self, input_dim: usize) -> usize {
        1 + input_dim * self.degree()
    }

    /// Input dimension implied by a design dimension, if consistent.
    pub fn input_dim(&self, output_dim: usize) -> Option<usize> {
        let d = self.degree();
        (output_dim >= 1 + d && (output_dim - 1) % d == 0).then(|| (output_dim - 1) / d)
    }

    pub fn validate(&self) -> Result<()> {
        if self.degree() == 0 {
            return Err(invalid!("polynomial basis degree must be at least 1"));
        }
        Ok(())
    }

    pub fn apply(&self, x: &[f64]) -> Result<DVector<f64>> {
        self.validate()?;
        if x.is_empty() {
            return Err(invalid!("basis input must have at least one feature"));
        }
        check_finite(x, "basis input")?;
        let degree = self.degree();
        let mut out = Vec::with_capacity(self.output_dim(x.len()));
        out.push(1.0);
        let mut powers: Vec<f64> = x.to_vec();
        for p in 1..=degree {
            if p > 1 {
                for (acc, v) in powers.iter_mut().zip(x) {
                    *acc *= v;
                }
            }
            out.extend_from_slice(&powers);
        }
        Ok(DVector::from_vec(out))
    }

    /// Stack `apply` over rows into an `N x D` design matrix.
    pub fn design_matrix<R: AsRef<[f64]>>(&self, rows: &[R]) -> Result<DMatrix<f64>> {
        let first = rows.first().ok_or_else(|| invalid!("design matrix needs at least one row"))?;
        let f = first.as_ref().len();
        let d = self.output_dim(f);
        let mut m = DMatrix::zeros(rows.len(), d);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != f {
                return Err(invalid!("row {i} has {} features, expected {f}", row.len()));
            }
            m.set_row(i, &self.apply(row)?.transpose());
        }
        Ok(m)
    }
}

/// Free-function form of [`Basis::apply`].
pub fn apply_basis(x: &[f64], basis: Basis) -> Result<DVector<f64>> {
    basis.apply(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    #[test]
    fn linear_with_bias() {
        assert_eq!(Basis::LinearWithBias.apply(&[2.0]).unwrap().as_slice(), &[1.0, 2.0]);
        assert_eq!(apply_basis(&[0.0, 0.0], Basis::LinearWithBias).unwrap().as_slice(), &[1.0, 0.0, 0.0]);
    }

    #[test]
    fn polynomial_degree_two() {
        let b = Basis::Polynomial { degree: 2 };
        assert_eq!(b.apply(&[2.0]).unwrap().as_slice(), &[1.0, 2.0, 4.0]);
        assert_eq!(b.apply(&[2.0, 3.0]).unwrap().as_slice(), &[1.0, 2.0, 3.0, 4.0, 9.0]);
        assert_eq!(b.output_dim(8), 17);
        assert_eq!(b.input_dim(17), Some(8));
    }

    #[test]
    fn rejects_non_finite_and_empty() {
        assert!(matches!(Basis::LinearWithBias.apply(&[f64::NAN]), Err(Error::InvalidInput(_))));
        assert!(matches!(Basis::LinearWithBias.apply(&[]), Err(Error::InvalidInput(_))));
        assert!(Basis::Polynomial { degree: 0 }.apply(&[1.0]).is_err());
    }
}

//! Small dense symmetric solves.
//!
//! Matrices cross this module as row-major `&[f64]` of length `dim * dim`.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};

/// Base ridge, relative to the mean diagonal entry.
pub const RIDGE_START: f64 = 1e-10;
/// Largest ridge tried before giving up.
pub const RIDGE_MAX: f64 = 1e-4;

fn to_matrix(a: &[f64], dim: usize) -> DMatrix<f64> {
    DMatrix::from_row_slice(dim, dim, a)
}

fn factor(a: DMatrix<f64>) -> Option<Cholesky<f64, Dyn>> {
    // `Cholesky::new` accepts NaN pivots; reject them here.
    let chol = Cholesky::new(a)?;
    chol.l_dirty().diagonal().iter().all(|v| v.is_finite() && *v > 0.0).then_some(chol)
}

/// Row-major lower Cholesky factor of `a`, or `None` if `a` is not
/// numerically positive definite.
pub fn cholesky(a: &[f64], dim: usize) -> Option<Vec<f64>> {
    debug_assert_eq!(a.len(), dim * dim);
    let l = factor(to_matrix(a, dim))?.l();
    Some(l.transpose().as_slice().to_vec())
}

/// Solves `a x = b` without regularization. `None` if `a` is not positive
/// definite.
pub fn solve_exact(a: &[f64], dim: usize, b: &[f64]) -> Option<Vec<f64>> {
    let chol = factor(to_matrix(a, dim))?;
    Some(chol.solve(&DVector::from_column_slice(b)).as_slice().to_vec())
}

/// A ridged Cholesky factorization of a symmetric PSD matrix.
#[derive(Debug, Clone)]
pub struct RidgedCholesky {
    factor: Option<Cholesky<f64, Dyn>>,
    ridge: f64,
}

impl RidgedCholesky {
    /// Factors `a` as is when it is positive definite. Otherwise factors
    /// `a + ridge * I` with `ridge = 1e-10 * trace(a) / dim`, escalating by
    /// 10x up to `1e-4 * trace(a) / dim`.
    pub fn new(a: &[f64], dim: usize) -> Result<Self> {
        if a.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                context: "square matrix",
                expected: dim * dim,
                got: a.len(),
            });
        }
        if dim == 0 {
            return Ok(Self {
                factor: None,
                ridge: 0.0,
            });
        }
        let base = to_matrix(a, dim);
        if let Some(chol) = factor(base.clone()) {
            return Ok(Self {
                factor: Some(chol),
                ridge: 0.0,
            });
        }
        let scale = base.trace() / dim as f64;
        let mut rel = RIDGE_START;
        let mut ridge = rel * scale;
        loop {
            let mut shifted = base.clone();
            for i in 0..dim {
                shifted[(i, i)] += ridge;
            }
            if let Some(chol) = factor(shifted) {
                return Ok(Self {
                    factor: Some(chol),
                    ridge,
                });
            }
            rel *= 10.0;
            if rel > RIDGE_MAX * (1.0 + 1e-9) {
                return Err(Error::SingularCovariance { ridge });
            }
            ridge = rel * scale;
        }
    }

    pub fn ridge(&self) -> f64 {
        self.ridge
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        match &self.factor {
            Some(chol) => chol.solve(&DVector::from_column_slice(b)).as_slice().to_vec(),
            None => Vec::new(),
        }
    }
}

/// Solves `(a + ridge I) x = b` under the escalating ridge policy.
pub fn solve_spd(a: &[f64], dim: usize, b: &[f64]) -> Result<Vec<f64>> {
    if b.len() != dim {
        return Err(Error::DimensionMismatch {
            context: "right-hand side",
            expected: dim,
            got: b.len(),
        });
    }
    Ok(RidgedCholesky::new(a, dim)?.solve(b))
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_known_system() {
        let a = [4.0, 2.0, 2.0, 3.0];
        let x = solve_spd(&a, 2, &[2.0, 1.0]).unwrap();
        // 4x + 2y = 2, 2x + 3y = 1 -> x = 0.5, y = 0
        assert!((x[0] - 0.5).abs() < 1e-9);
        assert!(x[1].abs() < 1e-9);
    }

    #[test]
    fn factor_is_row_major_lower() {
        let a = [4.0, 2.0, 2.0, 3.0];
        let l = cholesky(&a, 2).unwrap();
        assert_eq!(l[1], 0.0);
        assert!((l[0] - 2.0).abs() < 1e-15);
        assert!((l[2] - 1.0).abs() < 1e-15);
        assert!((l[3] - 2f64.sqrt()).abs() < 1e-15);
        assert!(solve_exact(&[1.0, 2.0, 2.0, 1.0], 2, &[1.0, 1.0]).is_none());
    }

    #[test]
    fn rank_deficient_is_rescued_by_ridge() {
        // Rank one: [1 1; 1 1].
        let a = [1.0, 1.0, 1.0, 1.0];
        let chol = RidgedCholesky::new(&a, 2).unwrap();
        assert!(chol.ridge() > 0.0);
        let x = chol.solve(&[1.0, 1.0]);
        assert!(x.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn zero_matrix_is_singular() {
        let a = [0.0; 4];
        assert!(matches!(
            RidgedCholesky::new(&a, 2),
            Err(Error::SingularCovariance { .. })
        ));
    }

    #[test]
    fn indefinite_matrix_is_singular() {
        let a = [1.0, 0.0, 0.0, -1.0];
        assert!(RidgedCholesky::new(&a, 2).is_err());
    }
}

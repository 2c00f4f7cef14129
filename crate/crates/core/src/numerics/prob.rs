use crate::error::{Error, Result};
use crate::numerics::{softmax_rows, Matrix};
use crate::scalar::Scalar;

/// Row-stochastic matrix: one classifier probability vector per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbMatrix<T>(Matrix<T>);

impl<T: Scalar> ProbMatrix<T> {
    /// Tolerance on `|Σ row − 1|` and on negative entries.
    pub fn tolerance(cols: usize) -> T {
        T::of(1e-9).max(T::of(64.0 * cols.max(1) as f64) * T::epsilon())
    }

    /// Validates that every row lies on the probability simplex.
    pub fn new(m: Matrix<T>) -> Result<Self> {
        let tol = Self::tolerance(m.cols());
        for (i, row) in m.iter_rows().enumerate() {
            let sum: T = row.iter().copied().sum();
            let min = row.iter().copied().fold(T::infinity(), T::min);
            if (sum - T::one()).abs() > tol || min < -tol {
                return Err(Error::NotOnSimplex {
                    row: i,
                    sum: sum.as_f64(),
                    min: min.as_f64(),
                });
            }
        }
        Ok(Self(m))
    }

    pub fn from_logits(logits: &Matrix<T>) -> Result<Self> {
        Ok(Self(softmax_rows(logits)?))
    }

    pub fn matrix(&self) -> &Matrix<T> {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix<T> {
        self.0
    }

    pub fn rows(&self) -> usize {
        self.0.rows()
    }

    pub fn classes(&self) -> usize {
        self.0.cols()
    }

    pub fn row(&self, i: usize) -> &[T] {
        self.0.row(i)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_off_simplex_row_by_index() {
        let m = Matrix::from_rows(&[vec![0.5, 0.5], vec![0.7, 0.7]]).unwrap();
        match ProbMatrix::new(m) {
            Err(Error::NotOnSimplex { row, .. }) => assert_eq!(row, 1),
            other => panic!("{other:?}"),
        }
        let neg = Matrix::from_rows(&[vec![1.5, -0.5]]).unwrap();
        assert!(ProbMatrix::new(neg).is_err());
    }

    #[test]
    fn logits_become_rows_on_simplex() {
        let logits = Matrix::from_rows(&[vec![1.0f64, 2.0, 3.0], vec![0.0, 0.0, -5.0]]).unwrap();
        let p = ProbMatrix::from_logits(&logits).unwrap();
        assert!(ProbMatrix::new(p.matrix().clone()).is_ok());
    }
}

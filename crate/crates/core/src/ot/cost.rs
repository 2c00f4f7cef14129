use crate::error::{Error, Result};
use crate::numerics::{Matrix, ProbMatrix};
use crate::scalar::Scalar;

/// Pairwise source-to-target transport costs, `n_s × n_t`, all finite and `≥ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix<T>(Matrix<T>);

impl<T: Scalar> CostMatrix<T> {
    pub fn new(m: Matrix<T>) -> Result<Self> {
        if !m.is_finite() {
            return Err(Error::NonFinite("CostMatrix"));
        }
        if m.as_slice().iter().any(|&v| v < T::zero()) {
            return Err(Error::invalid("cost matrix has a negative entry"));
        }
        Ok(Self(m))
    }

    pub fn matrix(&self) -> &Matrix<T> {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix<T> {
        self.0
    }

    pub fn shape(&self) -> (usize, usize) {
        self.0.shape()
    }

    pub fn max(&self) -> T {
        self.0.max_abs()
    }

    /// Multiplies every cost by `c > 0`.
    pub fn scaled(&self, c: T) -> Result<Self> {
        if !(c > T::zero()) {
            return Err(Error::invalid("cost scale must be positive"));
        }
        Ok(Self(self.0.scale(c)))
    }
}

/// `m[i][j] = ‖g_i^s − g_j^t‖₂` over classifier probability rows.
pub fn build_cost_matrix<T: Scalar>(
    src: &ProbMatrix<T>,
    tgt: &ProbMatrix<T>,
) -> Result<CostMatrix<T>> {
    if src.classes() != tgt.classes() {
        return Err(Error::shape(
            "build_cost_matrix",
            format!("{} classes", src.classes()),
            format!("{} classes", tgt.classes()),
        ));
    }
    let (ns, nt) = (src.rows(), tgt.rows());
    let mut m = Matrix::zeros(ns, nt);
    for i in 0..ns {
        let gs = src.row(i);
        for j in 0..nt {
            let sq: T = gs
                .iter()
                .zip(tgt.row(j))
                .map(|(&a, &b)| (a - b) * (a - b))
                .sum();
            m[(i, j)] = sq.sqrt();
        }
    }
    Ok(CostMatrix(m))
}

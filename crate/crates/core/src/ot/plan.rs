use crate::error::{Error, Result};
use crate::numerics::Matrix;
use crate::scalar::Scalar;

/// Row (source) and column (target) masses of a transport problem.
#[derive(Debug, Clone, PartialEq)]
pub struct Marginals<T> {
    pub a: Vec<T>,
    pub b: Vec<T>,
}

impl<T: Scalar> Marginals<T> {
    /// Arbitrary nonnegative masses. Balance is checked by the solvers.
    pub fn new(a: Vec<T>, b: Vec<T>) -> Result<Self> {
        for v in a.iter().chain(&b) {
            if !v.is_finite() || *v < T::zero() {
                return Err(Error::invalid("marginal entries must be finite and nonnegative"));
            }
        }
        Ok(Self { a, b })
    }

    /// `a_i = 1/n_s`, `b_j = 1/n_t`.
    pub fn uniform(ns: usize, nt: usize) -> Self {
        let a = vec![T::one() / T::of_usize(ns.max(1)); ns];
        let b = vec![T::one() / T::of_usize(nt.max(1)); nt];
        Self { a, b }
    }

    pub(crate) fn check(&self, shape: (usize, usize)) -> Result<()> {
        let (ns, nt) = shape;
        if ns == 0 || nt == 0 {
            return Err(Error::EmptyProblem { rows: ns, cols: nt });
        }
        if self.a.len() != ns || self.b.len() != nt {
            return Err(Error::shape(
                "marginals",
                format!("{ns} + {nt}"),
                format!("{} + {}", self.a.len(), self.b.len()),
            ));
        }
        let sa: T = self.a.iter().copied().sum();
        let sb: T = self.b.iter().copied().sum();
        if (sa - sb).abs() > T::of(1e-9).max(T::of(64.0) * T::epsilon()) {
            return Err(Error::InfeasibleMarginals {
                source_mass: sa.as_f64(),
                target_mass: sb.as_f64(),
            });
        }
        Ok(())
    }
}

/// Coupling `γ` between source rows and target columns.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportPlan<T> {
    pub gamma: Matrix<T>,
    /// `⟨γ, M⟩_F`.
    pub objective: T,
    /// `‖γ1 − a‖₁ + ‖γᵀ1 − b‖₁` at return.
    pub marginal_error: T,
    pub iterations: usize,
    /// Always true for the exact solver. Sinkhorn sets it only when the
    /// marginal tolerance was reached before `max_iter`.
    pub converged: bool,
}

impl<T: Scalar> TransportPlan<T> {
    pub(crate) fn marginal_l1(gamma: &Matrix<T>, marg: &Marginals<T>) -> (T, T) {
        let row: T = gamma
            .row_sums()
            .iter()
            .zip(&marg.a)
            .map(|(&r, &a)| (r - a).abs())
            .sum();
        let col: T = gamma
            .col_sums()
            .iter()
            .zip(&marg.b)
            .map(|(&c, &b)| (c - b).abs())
            .sum();
        (row, col)
    }

    pub fn total_mass(&self) -> T {
        self.gamma.sum()
    }
}

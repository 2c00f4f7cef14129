use crate::error::{Error, Result};
use crate::numerics::{log_sum_exp, Matrix};
use crate::ot::{CostMatrix, Marginals, TransportPlan};
use crate::scalar::Scalar;

/// Settings for [`solve_sinkhorn`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinkhornParams<T> {
    /// Entropic regularization strength, in cost units.
    pub eps: T,
    /// Budget of full (row + column) scaling sweeps, summed over all stages.
    pub max_iter: usize,
    /// Stop once both marginal L1 errors are below this.
    pub tol: T,
    /// Anneal from `max(max_cost, eps)` down to `eps`, halving per stage and
    /// warm-starting the dual potentials. Without it small `eps` converges
    /// very slowly.
    pub eps_scaling: bool,
}

impl<T: Scalar> SinkhornParams<T> {
    pub fn new(eps: T) -> Self {
        Self {
            eps,
            max_iter: 200_000,
            tol: T::of(1e-9),
            eps_scaling: true,
        }
    }
}

/// Intermediate annealing stages stop at this marginal error or sweep count.
const STAGE_TOL: f64 = 1e-3;
const STAGE_ITERS: usize = 200;

/// Entropic OT by log-domain Sinkhorn iterations.
///
/// The plan is `γ_ij = exp((f_i + g_j − m_ij) / eps)`; `f` and `g` are updated
/// alternately so that rows, then columns, match their marginals. If the
/// tolerance is not reached within `max_iter` sweeps the plan is returned with
/// `converged = false`.
pub fn solve_sinkhorn<T: Scalar>(
    cost: &CostMatrix<T>,
    marg: &Marginals<T>,
    params: &SinkhornParams<T>,
) -> Result<TransportPlan<T>> {
    marg.check(cost.shape())?;
    if !(params.eps > T::zero()) || !params.eps.is_finite() {
        return Err(Error::invalid("sinkhorn eps must be positive and finite"));
    }
    if !(params.tol > T::zero()) {
        return Err(Error::invalid("sinkhorn tol must be positive"));
    }

    let c = cost.matrix();
    let (ns, nt) = c.shape();
    let log_a: Vec<T> = marg.a.iter().map(|&v| v.ln()).collect();
    let log_b: Vec<T> = marg.b.iter().map(|&v| v.ln()).collect();
    let mut f = vec![T::zero(); ns];
    let mut g = vec![T::zero(); nt];
    let mut scratch = vec![T::zero(); ns.max(nt)];

    let mut eps = if params.eps_scaling {
        cost.max().max(params.eps)
    } else {
        params.eps
    };
    let half = T::of(0.5);
    let mut iterations = 0;
    let mut err = T::infinity();
    loop {
        let last_stage = eps <= params.eps;
        let (stage_tol, stage_cap) = if last_stage {
            (params.tol, usize::MAX)
        } else {
            (T::of(STAGE_TOL).max(params.tol), STAGE_ITERS)
        };
        let mut stage_iters = 0;
        while iterations < params.max_iter && stage_iters < stage_cap {
            sweep(c, &log_a, &log_b, &mut f, &mut g, eps, &mut scratch);
            iterations += 1;
            stage_iters += 1;
            err = row_error(c, &f, &g, &marg.a, eps);
            if err < stage_tol {
                break;
            }
        }
        if last_stage || iterations >= params.max_iter {
            break;
        }
        eps = (eps * half).max(params.eps);
    }

    let mut gamma = Matrix::zeros(ns, nt);
    for i in 0..ns {
        for j in 0..nt {
            gamma[(i, j)] = ((f[i] + g[j] - c[(i, j)]) / eps).exp();
        }
    }
    let objective = gamma.frobenius_dot(c)?;
    let (row_err, col_err) = TransportPlan::marginal_l1(&gamma, marg);
    let converged = eps <= params.eps && row_err < params.tol && col_err < params.tol;
    if !converged {
        log::warn!(
            "sinkhorn stopped after {iterations} sweeps without converging (row {row_err}, col {col_err}, last {err})"
        );
    }
    Ok(TransportPlan {
        gamma,
        objective,
        marginal_error: row_err + col_err,
        iterations,
        converged,
    })
}

fn sweep<T: Scalar>(
    c: &Matrix<T>,
    log_a: &[T],
    log_b: &[T],
    f: &mut [T],
    g: &mut [T],
    eps: T,
    scratch: &mut [T],
) {
    let (ns, nt) = c.shape();
    for i in 0..ns {
        if log_a[i] == T::neg_infinity() {
            f[i] = T::neg_infinity();
            continue;
        }
        let row = c.row(i);
        for j in 0..nt {
            scratch[j] = (g[j] - row[j]) / eps;
        }
        f[i] = eps * (log_a[i] - log_sum_exp(&scratch[..nt]));
    }
    for j in 0..nt {
        if log_b[j] == T::neg_infinity() {
            g[j] = T::neg_infinity();
            continue;
        }
        for i in 0..ns {
            scratch[i] = (f[i] - c[(i, j)]) / eps;
        }
        g[j] = eps * (log_b[j] - log_sum_exp(&scratch[..ns]));
    }
}

/// Row-marginal L1 error; columns are exact right after a sweep.
fn row_error<T: Scalar>(c: &Matrix<T>, f: &[T], g: &[T], a: &[T], eps: T) -> T {
    let mut err = T::zero();
    for (i, row) in c.iter_rows().enumerate() {
        let mut s = T::zero();
        for (j, &cij) in row.iter().enumerate() {
            s += ((f[i] + g[j] - cij) / eps).exp();
        }
        err += (s - a[i]).abs();
    }
    err
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;

    use super::*;
    use crate::ot::solve_exact;

    fn cost(rows: &[&[f64]]) -> CostMatrix<f64> {
        CostMatrix::new(Matrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap())
            .unwrap()
    }

    #[test]
    fn large_eps_gives_independent_coupling() {
        let c = cost(&[&[0.0, 3.0], &[1.0, 2.0]]);
        let p = solve_sinkhorn(&c, &Marginals::uniform(2, 2), &SinkhornParams::new(1e6)).unwrap();
        assert!(p.converged);
        for &v in p.gamma.as_slice() {
            assert_abs_diff_eq!(v, 0.25, epsilon = 1e-5);
        }
    }

    #[test]
    fn small_eps_approaches_exact() {
        let c = cost(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let p = solve_sinkhorn(&c, &Marginals::uniform(2, 2), &SinkhornParams::new(1e-3)).unwrap();
        assert!(p.converged);
        assert!(p.objective.abs() < 1e-2);
        assert!(p.marginal_error < 1e-6);
    }

    #[test]
    fn objective_bounded_below_by_exact() {
        let c = cost(&[&[1.0, 3.0], &[2.0, 1.0]]);
        let marg = Marginals::new(vec![0.6, 0.4], vec![0.5, 0.5]).unwrap();
        let exact = solve_exact(&c, &marg).unwrap();
        for eps in [1.0, 0.1, 0.01] {
            let p = solve_sinkhorn(&c, &marg, &SinkhornParams::new(eps)).unwrap();
            assert!(p.objective >= exact.objective - 1e-9);
        }
    }

    #[test]
    fn non_convergence_is_flagged() {
        let c = cost(&[&[0.0, 5.0], &[5.0, 0.0]]);
        let params = SinkhornParams {
            eps: 1e-3,
            max_iter: 1,
            tol: 1e-12,
            eps_scaling: true,
        };
        let p = solve_sinkhorn(&c, &Marginals::uniform(2, 2), &params).unwrap();
        assert!(!p.converged);
    }

    #[test]
    fn bad_params_rejected() {
        let c = cost(&[&[0.0]]);
        let m = Marginals::uniform(1, 1);
        assert!(solve_sinkhorn(&c, &m, &SinkhornParams::new(0.0)).is_err());
        let mut p = SinkhornParams::new(1.0);
        p.tol = 0.0;
        assert!(solve_sinkhorn(&c, &m, &p).is_err());
    }

    #[test]
    fn zero_mass_rows_stay_empty() {
        let c = cost(&[&[1.0, 2.0], &[0.0, 0.0], &[2.0, 1.0]]);
        let marg = Marginals::new(vec![0.5, 0.0, 0.5], vec![0.5, 0.5]).unwrap();
        let p = solve_sinkhorn(&c, &marg, &SinkhornParams::new(0.05)).unwrap();
        assert!(p.converged);
        assert_eq!(p.gamma.row(1), &[0.0, 0.0]);
    }
}

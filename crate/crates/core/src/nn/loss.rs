use crate::error::{Error, Result};
use crate::numerics::{Matrix, ProbMatrix};
use crate::scalar::Scalar;

/// Probabilities below this are clamped before taking logarithms.
pub const PROB_FLOOR: f64 = 1e-300;
/// Discriminator outputs are clamped into `[DISC_CLAMP, 1 − DISC_CLAMP]`.
const DISC_CLAMP: f64 = 1e-12;

#[inline]
pub fn sigmoid<T: Scalar>(z: T) -> T {
    if z >= T::zero() {
        T::one() / (T::one() + (-z).exp())
    } else {
        let e = z.exp();
        e / (T::one() + e)
    }
}

#[derive(Debug, Clone)]
pub struct CrossEntropy<T> {
    pub loss: T,
    /// Gradient w.r.t. the logits that produced `probs`.
    pub grad_logits: Matrix<T>,
    /// Samples whose true-class probability hit [`PROB_FLOOR`].
    pub clamped: usize,
}

/// `(1/n) Σᵢ vᵢ · (−ln p[i][yᵢ])` with gradient `(vᵢ/n)(pᵢ − onehot(yᵢ))`.
pub fn weighted_cross_entropy<T: Scalar>(
    probs: &ProbMatrix<T>,
    labels: &[usize],
    v: &[T],
) -> Result<CrossEntropy<T>> {
    let (n, c) = (probs.rows(), probs.classes());
    if labels.len() != n || v.len() != n {
        return Err(Error::shape("weighted_cross_entropy", n, format!("{} labels, {} weights", labels.len(), v.len())));
    }
    if n == 0 {
        return Err(Error::invalid("cross entropy of an empty batch"));
    }
    let floor = T::of(PROB_FLOOR).max(T::min_positive_value());
    let inv_n = T::one() / T::of_usize(n);
    let mut loss = T::zero();
    let mut clamped = 0;
    let mut grad = probs.matrix().clone();
    for i in 0..n {
        let y = labels[i];
        if y >= c {
            return Err(Error::invalid(format!("label {y} out of range for {c} classes")));
        }
        let mut p = probs.row(i)[y];
        if p < floor {
            p = floor;
            clamped += 1;
        }
        loss += v[i] * -p.ln();
        let scale = v[i] * inv_n;
        let row = grad.row_mut(i);
        row[y] -= T::one();
        row.iter_mut().for_each(|g| *g *= scale);
    }
    if clamped > 0 {
        log::warn!("cross entropy: {clamped} true-class probabilities clamped at {PROB_FLOOR:e}");
    }
    Ok(CrossEntropy {
        loss: loss * inv_n,
        grad_logits: grad,
        clamped,
    })
}

#[derive(Debug, Clone)]
pub struct DomainLoss<T> {
    pub loss: T,
    /// Gradient w.r.t. the source discriminator logits.
    pub grad_src: Vec<T>,
    /// Gradient w.r.t. the target discriminator logits.
    pub grad_tgt: Vec<T>,
    /// Outputs that were clamped away from 0 or 1.
    pub clamped: usize,
}

/// `mean_s(vᵢ ln d_sᵢ) + mean_t(ln(1 − d_tⱼ))` for logistic outputs `d`.
///
/// With `d = σ(z)`, the logit gradients are `vᵢ(1 − d_sᵢ)/n_s` and `−d_tⱼ/n_t`.
pub fn weighted_domain_loss<T: Scalar>(d_src: &[T], d_tgt: &[T], v_src: &[T]) -> Result<DomainLoss<T>> {
    if d_src.len() != v_src.len() {
        return Err(Error::shape("weighted_domain_loss", d_src.len(), v_src.len()));
    }
    if d_src.is_empty() || d_tgt.is_empty() {
        return Err(Error::invalid("domain loss needs samples from both domains"));
    }
    if d_src.iter().chain(d_tgt).any(|d| d.is_nan()) {
        return Err(Error::NonFinite("weighted_domain_loss"));
    }
    let lo = T::of(DISC_CLAMP);
    let hi = T::one() - lo;
    let mut clamped = 0;
    let mut clamp = |d: T| {
        if d < lo {
            clamped += 1;
            lo
        } else if d > hi {
            clamped += 1;
            hi
        } else {
            d
        }
    };
    let inv_s = T::one() / T::of_usize(d_src.len());
    let inv_t = T::one() / T::of_usize(d_tgt.len());

    let mut src_term = T::zero();
    let mut grad_src = Vec::with_capacity(d_src.len());
    for (&d, &v) in d_src.iter().zip(v_src) {
        let d = clamp(d);
        src_term += v * d.ln();
        grad_src.push(v * (T::one() - d) * inv_s);
    }
    let mut tgt_term = T::zero();
    let mut grad_tgt = Vec::with_capacity(d_tgt.len());
    for &d in d_tgt {
        let d = clamp(d);
        tgt_term += (T::one() - d).ln();
        grad_tgt.push(-d * inv_t);
    }
    Ok(DomainLoss {
        loss: src_term * inv_s + tgt_term * inv_t,
        grad_src,
        grad_tgt,
        clamped,
    })
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;

    use super::*;

    fn probs(rows: &[&[f64]]) -> ProbMatrix<f64> {
        ProbMatrix::new(Matrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()).unwrap()
    }

    #[test]
    fn certain_correct_prediction_costs_nothing() {
        let ce = weighted_cross_entropy(&probs(&[&[0.0, 1.0]]), &[1], &[1.0]).unwrap();
        assert_eq!(ce.loss, 0.0);
        assert_eq!(ce.grad_logits.as_slice(), &[0.0, 0.0]);
    }

    #[test]
    fn uniform_four_classes() {
        let ce = weighted_cross_entropy(&probs(&[&[0.25; 4]]), &[2], &[1.0]).unwrap();
        assert_abs_diff_eq!(ce.loss, 4f64.ln(), epsilon = 1e-15);
        assert_abs_diff_eq!(ce.loss, 1.386294, epsilon = 1e-6);
    }

    #[test]
    fn doubling_weights_doubles_loss_and_gradient() {
        let p = probs(&[&[0.2, 0.8], &[0.6, 0.4]]);
        let a = weighted_cross_entropy(&p, &[0, 1], &[0.7, 1.3]).unwrap();
        let b = weighted_cross_entropy(&p, &[0, 1], &[1.4, 2.6]).unwrap();
        assert_eq!(b.loss, 2.0 * a.loss);
        for (x, y) in a.grad_logits.as_slice().iter().zip(b.grad_logits.as_slice()) {
            assert_eq!(*y, 2.0 * x);
        }
    }

    #[test]
    fn zero_probability_is_clamped() {
        let ce = weighted_cross_entropy(&probs(&[&[1.0, 0.0]]), &[1], &[1.0]).unwrap();
        assert_eq!(ce.clamped, 1);
        assert!(ce.loss.is_finite());
    }

    #[test]
    fn cross_entropy_argument_errors() {
        let p = probs(&[&[0.5, 0.5]]);
        assert!(weighted_cross_entropy(&p, &[0, 1], &[1.0]).is_err());
        assert!(weighted_cross_entropy(&p, &[2], &[1.0]).is_err());
    }

    #[test]
    fn half_half_domain_loss() {
        let d = weighted_domain_loss(&[0.5], &[0.5], &[1.0]).unwrap();
        assert_abs_diff_eq!(d.loss, 2.0 * 0.5f64.ln(), epsilon = 1e-15);
        assert_abs_diff_eq!(d.loss, -1.386294, epsilon = 1e-6);
        assert_eq!(d.grad_src, vec![0.5]);
        assert_eq!(d.grad_tgt, vec![-0.5]);
    }

    #[test]
    fn zero_source_weights_leave_target_term() {
        let d = weighted_domain_loss(&[0.3, 0.9], &[0.2, 0.4], &[0.0, 0.0]).unwrap();
        let tgt = ((0.8f64).ln() + (0.6f64).ln()) / 2.0;
        assert_abs_diff_eq!(d.loss, tgt, epsilon = 1e-15);
        assert!(d.grad_src.iter().all(|&g| g == 0.0));
    }

    #[test]
    fn perfect_discrimination_approaches_zero_from_below() {
        let d = weighted_domain_loss(&[1.0 - 1e-9], &[1e-9], &[1.0]).unwrap();
        assert!(d.loss < 0.0 && d.loss > -1e-8);
        let saturated = weighted_domain_loss(&[1.0], &[0.0], &[1.0]).unwrap();
        assert_eq!(saturated.clamped, 2);
        assert!(saturated.loss < 0.0 && saturated.loss > -1e-11);
    }

    #[test]
    fn sigmoid_is_stable() {
        assert_eq!(sigmoid(0.0f64), 0.5);
        assert!(sigmoid(-800.0f64) >= 0.0);
        assert_eq!(sigmoid(800.0f64), 1.0);
    }
}

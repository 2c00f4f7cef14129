use crate::error::{Error, Result};
use crate::numerics::Matrix;
use crate::scalar::Scalar;

/// `ln Σ exp(xᵢ)` with max-subtraction.
pub fn log_sum_exp<T: Scalar>(xs: &[T]) -> T {
    let max = xs.iter().copied().fold(T::neg_infinity(), T::max);
    if !max.is_finite() {
        return max;
    }
    max + xs.iter().map(|&x| (x - max).exp()).sum::<T>().ln()
}

/// Numerically stable softmax of a single logit vector.
pub fn softmax<T: Scalar>(logits: &[T]) -> Result<Vec<T>> {
    if logits.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("softmax"));
    }
    let mut out = logits.to_vec();
    softmax_in_place(&mut out);
    Ok(out)
}

/// Row-wise softmax of a logit matrix.
pub fn softmax_rows<T: Scalar>(logits: &Matrix<T>) -> Result<Matrix<T>> {
    if !logits.is_finite() {
        return Err(Error::NonFinite("softmax_rows"));
    }
    let mut out = logits.clone();
    for i in 0..out.rows() {
        softmax_in_place(out.row_mut(i));
    }
    Ok(out)
}

fn softmax_in_place<T: Scalar>(xs: &mut [T]) {
    if xs.is_empty() {
        return;
    }
    let max = xs.iter().copied().fold(T::neg_infinity(), T::max);
    let mut total = T::zero();
    for x in xs.iter_mut() {
        *x = (*x - max).exp();
        total += *x;
    }
    // total >= 1 because the max entry contributes exp(0).
    for x in xs.iter_mut() {
        *x /= total;
    }
}

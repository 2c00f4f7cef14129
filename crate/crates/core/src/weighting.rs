//! Class-wise source weights from a transport plan.
//!
//! The guide matrix `T = γ* ∘ M` keeps the cost actually paid by every
//! transported pair. A source class whose samples are shipped cheaply to
//! target samples is well matched and gets a large weight; a class carrying
//! expensive mass gets a small one:
//!
//! ```text
//! w_k = ( count_k^α · Σ_{i: y_i = k} Σ_j t_ij )⁻¹
//! ```

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::Matrix;
use crate::ot::{CostMatrix, TransportPlan};
use crate::scalar::Scalar;

/// Default floor on the bracketed denominator before inversion.
pub const DEFAULT_EPS_FLOOR: f64 = 1e-8;

/// `T = γ* ∘ M`, one row per source sample.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightGuidingMatrix<T>(Matrix<T>);

impl<T: Scalar> WeightGuidingMatrix<T> {
    pub fn matrix(&self) -> &Matrix<T> {
        &self.0
    }

    /// Total guided mass `Σ_j t_ij` of each source row.
    pub fn row_mass(&self) -> Vec<T> {
        self.0.row_sums()
    }

    /// Wraps a precomputed `T`; entries must be finite and nonnegative.
    pub fn from_matrix(m: Matrix<T>) -> Result<Self> {
        if !m.is_finite() || m.as_slice().iter().any(|&v| v < T::zero()) {
            return Err(Error::invalid("guide matrix entries must be finite and >= 0"));
        }
        Ok(Self(m))
    }
}

/// Positive weight per source class present in the batch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassWeights<T> {
    pub weights: BTreeMap<usize, T>,
    pub alpha: T,
}

impl<T: Scalar> ClassWeights<T> {
    /// Weight 1 for every class in `0..classes`.
    pub fn ones(classes: usize) -> Self {
        Self {
            weights: (0..classes).map(|k| (k, T::one())).collect(),
            alpha: T::zero(),
        }
    }

    pub fn get(&self, class: usize) -> Option<T> {
        self.weights.get(&class).copied()
    }

    /// Dense vector over `0..classes`, with `None` for absent classes.
    pub fn to_dense(&self, classes: usize) -> Vec<Option<T>> {
        (0..classes).map(|k| self.get(k)).collect()
    }
}

/// Hadamard product of the optimal plan with its cost matrix.
pub fn guide_matrix<T: Scalar>(
    plan: &TransportPlan<T>,
    cost: &CostMatrix<T>,
) -> Result<WeightGuidingMatrix<T>> {
    Ok(WeightGuidingMatrix(plan.gamma.hadamard(cost.matrix())?))
}

/// Class weights using the batch's own class counts for the `count_k^α` factor.
pub fn class_weights<T: Scalar>(
    guide: &WeightGuidingMatrix<T>,
    src_labels: &[usize],
    alpha: T,
    eps_floor: T,
) -> Result<ClassWeights<T>> {
    let counts = count_labels(src_labels);
    weights_from_counts(guide, src_labels, alpha, eps_floor, |k| counts[&k])
}

/// Like [`class_weights`], but the `count_k^α` factor comes from
/// `dataset_counts[k]` (e.g. whole-dataset class sizes) instead of the batch.
pub fn class_weights_with_counts<T: Scalar>(
    guide: &WeightGuidingMatrix<T>,
    src_labels: &[usize],
    alpha: T,
    eps_floor: T,
    dataset_counts: &[usize],
) -> Result<ClassWeights<T>> {
    if let Some(&bad) = src_labels.iter().find(|&&y| y >= dataset_counts.len() || dataset_counts[y] == 0) {
        return Err(Error::invalid(format!("no dataset count for class {bad}")));
    }
    weights_from_counts(guide, src_labels, alpha, eps_floor, |k| dataset_counts[k])
}

fn count_labels(labels: &[usize]) -> BTreeMap<usize, usize> {
    let mut counts = BTreeMap::new();
    for &y in labels {
        *counts.entry(y).or_insert(0) += 1;
    }
    counts
}

fn weights_from_counts<T: Scalar>(
    guide: &WeightGuidingMatrix<T>,
    src_labels: &[usize],
    alpha: T,
    eps_floor: T,
    count: impl Fn(usize) -> usize,
) -> Result<ClassWeights<T>> {
    if src_labels.len() != guide.0.rows() {
        return Err(Error::shape(
            "class_weights",
            format!("{} labels", guide.0.rows()),
            src_labels.len(),
        ));
    }
    if !(alpha >= T::zero()) || !alpha.is_finite() {
        return Err(Error::invalid("alpha must be finite and >= 0"));
    }
    // Sum the full row mass of T (all j) per class.
    let mut mass: BTreeMap<usize, T> = BTreeMap::new();
    for (&y, row_mass) in src_labels.iter().zip(guide.row_mass()) {
        *mass.entry(y).or_insert(T::zero()) += row_mass;
    }
    let weights = mass
        .into_iter()
        .map(|(k, m)| {
            let denom = T::of_usize(count(k)).powf(alpha) * m;
            let denom = if denom < eps_floor {
                log::debug!("class {k}: guided mass {denom} floored at {eps_floor}");
                eps_floor
            } else {
                denom
            };
            (k, denom.recip())
        })
        .collect();
    Ok(ClassWeights { weights, alpha })
}

/// Rescales so that per-sample weights over `labels` average to one.
pub fn normalize_weights<T: Scalar>(w: &ClassWeights<T>, labels: &[usize]) -> Result<ClassWeights<T>> {
    let per_sample = per_sample_weights(w, labels)?;
    let total: T = per_sample.iter().copied().sum();
    if !(total > T::zero()) || !total.is_finite() {
        return Err(Error::invalid("cannot normalize all-zero class weights"));
    }
    let factor = T::of_usize(labels.len()) / total;
    Ok(ClassWeights {
        weights: w.weights.iter().map(|(&k, &v)| (k, v * factor)).collect(),
        alpha: w.alpha,
    })
}

/// `v_i = w_{y_i}`.
pub fn per_sample_weights<T: Scalar>(w: &ClassWeights<T>, labels: &[usize]) -> Result<Vec<T>> {
    labels
        .iter()
        .map(|&y| w.get(y).ok_or(Error::MissingClass(y)))
        .collect()
}

/// Weighted label mass per class, `Σ_{i: y_i = k} v_i / Σ_i v_i`.
pub fn weighted_label_distribution<T: Scalar>(
    w: &ClassWeights<T>,
    labels: &[usize],
    classes: usize,
) -> Result<Vec<T>> {
    let mut mass = vec![T::zero(); classes];
    for (&y, v) in labels.iter().zip(per_sample_weights(w, labels)?) {
        if y >= classes {
            return Err(Error::invalid(format!("label {y} out of range for {classes} classes")));
        }
        mass[y] += v;
    }
    let total: T = mass.iter().copied().sum();
    if total > T::zero() {
        mass.iter_mut().for_each(|m| *m /= total);
    }
    Ok(mass)
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    use super::*;
    use crate::numerics::ProbMatrix;
    use crate::ot::{build_cost_matrix, solve_exact, Marginals};

    fn mat(rows: &[&[f64]]) -> Matrix<f64> {
        Matrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    fn plan(gamma: Matrix<f64>) -> TransportPlan<f64> {
        TransportPlan {
            gamma,
            objective: 0.0,
            marginal_error: 0.0,
            iterations: 0,
            converged: true,
        }
    }

    /// Guide matrix whose row masses are (0.2, 0.3, 0.1).
    fn hand_guide() -> WeightGuidingMatrix<f64> {
        WeightGuidingMatrix::from_matrix(mat(&[&[0.2, 0.0], &[0.1, 0.2], &[0.0, 0.1]])).unwrap()
    }

    #[test]
    fn guide_is_zero_on_zero_cost_support() {
        let p = plan(mat(&[&[0.5, 0.0], &[0.0, 0.5]]));
        let c = CostMatrix::new(mat(&[&[0.0, 1.0], &[1.0, 0.0]])).unwrap();
        assert_eq!(guide_matrix(&p, &c).unwrap().matrix(), &Matrix::zeros(2, 2));
    }

    #[test]
    fn guide_hand_product() {
        let p = plan(Matrix::filled(2, 2, 0.25));
        let c = CostMatrix::new(mat(&[&[1.0, 2.0], &[3.0, 4.0]])).unwrap();
        assert_eq!(guide_matrix(&p, &c).unwrap().matrix(), &mat(&[&[0.25, 0.5], &[0.75, 1.0]]));
    }

    #[test]
    fn guide_zero_cost() {
        let p = plan(mat(&[&[0.1, 0.4], &[0.3, 0.2]]));
        let c = CostMatrix::new(Matrix::zeros(2, 2)).unwrap();
        assert_eq!(guide_matrix(&p, &c).unwrap().matrix().sum(), 0.0);
        let bad = CostMatrix::new(Matrix::zeros(3, 2)).unwrap();
        assert!(guide_matrix(&p, &bad).is_err());
    }

    #[test]
    fn alpha_zero_hand_case() {
        let w = class_weights(&hand_guide(), &[0, 0, 1], 0.0, 1e-8).unwrap();
        assert_abs_diff_eq!(w.get(0).unwrap(), 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(w.get(1).unwrap(), 10.0, epsilon = 1e-12);
    }

    #[test]
    fn alpha_one_hand_case() {
        let w = class_weights(&hand_guide(), &[0, 0, 1], 1.0, 1e-8).unwrap();
        assert_abs_diff_eq!(w.get(0).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(w.get(1).unwrap(), 10.0, epsilon = 1e-12);
    }

    #[test]
    fn single_class_batch() {
        let g = hand_guide();
        let w = class_weights(&g, &[3, 3, 3], 0.0, 1e-8).unwrap();
        assert_eq!(w.weights.len(), 1);
        assert_abs_diff_eq!(w.get(3).unwrap(), 1.0 / 0.6, epsilon = 1e-12);
    }

    #[test]
    fn floor_applies_to_perfect_matches() {
        let g = WeightGuidingMatrix::from_matrix(Matrix::zeros(2, 2)).unwrap();
        let w = class_weights(&g, &[0, 1], 2.0, 1e-8).unwrap();
        assert_abs_diff_eq!(w.get(0).unwrap(), 1e8, epsilon = 1e-3);
    }

    #[test]
    fn dataset_counts_replace_batch_counts() {
        let w = class_weights_with_counts(&hand_guide(), &[0, 0, 1], 1.0, 1e-8, &[10, 4]).unwrap();
        assert_abs_diff_eq!(w.get(0).unwrap(), 1.0 / (10.0 * 0.5), epsilon = 1e-12);
        assert_abs_diff_eq!(w.get(1).unwrap(), 1.0 / (4.0 * 0.1), epsilon = 1e-12);
        assert!(class_weights_with_counts(&hand_guide(), &[0, 0, 2], 1.0, 1e-8, &[10, 4]).is_err());
    }

    #[test]
    fn label_length_mismatch() {
        assert!(class_weights(&hand_guide(), &[0, 1], 0.0, 1e-8).is_err());
        assert!(class_weights(&hand_guide(), &[0, 0, 1], -1.0, 1e-8).is_err());
    }

    #[test]
    fn duplicating_a_class_with_alpha_zero() {
        // Two copies of every class-0 row double the class-0 mass and halve w_0;
        // class 1 is unaffected.
        let g2 = WeightGuidingMatrix::from_matrix(mat(&[
            &[0.2, 0.0],
            &[0.1, 0.2],
            &[0.2, 0.0],
            &[0.1, 0.2],
            &[0.0, 0.1],
        ]))
        .unwrap();
        let w = class_weights(&g2, &[0, 0, 0, 0, 1], 0.0, 1e-8).unwrap();
        assert_abs_diff_eq!(w.get(0).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(w.get(1).unwrap(), 10.0, epsilon = 1e-12);
        // With α=1 the count factor enters too: 1/(4·1.0).
        let w1 = class_weights(&g2, &[0, 0, 0, 0, 1], 1.0, 1e-8).unwrap();
        assert_abs_diff_eq!(w1.get(0).unwrap(), 0.25, epsilon = 1e-12);
    }

    #[test]
    fn normalization_hand_case() {
        let w = ClassWeights {
            weights: [(0, 2.0), (1, 6.0)].into_iter().collect(),
            alpha: 0.0,
        };
        let n = normalize_weights(&w, &[0, 1]).unwrap();
        assert_abs_diff_eq!(n.get(0).unwrap(), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(n.get(1).unwrap(), 1.5, epsilon = 1e-15);
    }

    #[test]
    fn normalization_of_equal_weights_is_one() {
        let w = ClassWeights {
            weights: [(0, 3.0f64), (1, 3.0), (2, 3.0)].into_iter().collect(),
            alpha: 2.0,
        };
        let n = normalize_weights(&w, &[0, 1, 2, 0, 1, 2]).unwrap();
        assert!(n.weights.values().all(|&v| (v - 1.0).abs() < 1e-15));
    }

    #[test]
    fn normalization_rejects_zero_weights() {
        let w = ClassWeights {
            weights: [(0, 0.0)].into_iter().collect(),
            alpha: 0.0,
        };
        assert!(normalize_weights(&w, &[0, 0]).is_err());
    }

    #[test]
    fn per_sample_lookup() {
        let w = ClassWeights {
            weights: [(0, 1.5), (1, 0.5)].into_iter().collect(),
            alpha: 0.0,
        };
        assert_eq!(per_sample_weights(&w, &[0, 0, 1]).unwrap(), vec![1.5, 1.5, 0.5]);
        assert_eq!(per_sample_weights(&ClassWeights::<f64>::ones(3), &[2, 1]).unwrap(), vec![1.0, 1.0]);
        assert!(per_sample_weights(&w, &[]).unwrap().is_empty());
        assert!(matches!(per_sample_weights(&w, &[2]), Err(Error::MissingClass(2))));
    }

    #[test]
    fn matched_class_outweighs_unmatched() {
        // 4 classes, one-hot source rows: class 0 and 1 have exact counterparts
        // in the target batch, class 2 and 3 do not.
        let one_hot = |k: usize| {
            let mut r = vec![0.0; 4];
            r[k] = 1.0;
            r
        };
        let src = ProbMatrix::new(Matrix::from_rows(&[one_hot(0), one_hot(1), one_hot(2), one_hot(3)]).unwrap()).unwrap();
        let tgt = ProbMatrix::new(Matrix::from_rows(&[one_hot(0), one_hot(1), one_hot(0), one_hot(1)]).unwrap()).unwrap();
        let cost = build_cost_matrix(&src, &tgt).unwrap();
        let plan = solve_exact(&cost, &Marginals::uniform(4, 4)).unwrap();
        let w = class_weights(&guide_matrix(&plan, &cost).unwrap(), &[0, 1, 2, 3], 0.0, 1e-8).unwrap();
        for matched in [0, 1] {
            for unmatched in [2, 3] {
                assert!(w.get(matched).unwrap() > w.get(unmatched).unwrap());
            }
        }
    }

    #[test]
    fn weighted_distribution_hand_case() {
        let w = ClassWeights {
            weights: [(0, 1.0), (1, 3.0)].into_iter().collect(),
            alpha: 0.0,
        };
        let d = weighted_label_distribution(&w, &[0, 0, 1], 3).unwrap();
        assert_eq!(d, vec![0.4, 0.6, 0.0]);
    }

    proptest! {
        #[test]
        fn normalized_weights_average_to_one(
            raw in proptest::collection::vec(1e-3f64..1e3, 4),
            labels in proptest::collection::vec(0usize..4, 1..64),
        ) {
            let w = ClassWeights { weights: raw.iter().copied().enumerate().collect(), alpha: 1.0 };
            let n = normalize_weights(&w, &labels).unwrap();
            let v = per_sample_weights(&n, &labels).unwrap();
            let mean = v.iter().sum::<f64>() / v.len() as f64;
            prop_assert!((mean - 1.0).abs() < 1e-9);
            // Rescaling the input changes nothing.
            let w10 = ClassWeights { weights: raw.iter().map(|v| v * 10.0).enumerate().collect(), alpha: 1.0 };
            let n10 = normalize_weights(&w10, &labels).unwrap();
            for (a, b) in n.weights.values().zip(n10.weights.values()) {
                prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
            }
        }
    }
}

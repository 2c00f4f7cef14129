use lmdan::numerics::{Matrix, ProbMatrix};
use lmdan::ot::{build_cost_matrix, solve_exact, Marginals};
use lmdan::weighting::{class_weights, guide_matrix, normalize_weights, weighted_label_distribution};
use lmdan::ClassWeights64;

fn two_class_probs(first: &[f64]) -> ProbMatrix<f64> {
    let rows: Vec<Vec<f64>> = first.iter().map(|&p| vec![p, 1.0 - p]).collect();
    ProbMatrix::new(Matrix::from_rows(&rows).unwrap()).unwrap()
}

/// Four source rows against four target rows with two classes, so every cost
/// is `√2 |p − q|` on the first coordinate and the optimal plan is the sorted
/// matching: 0.9→1.0, 0.7→0.6, 0.2→0.0, 0.4→0.5, each with mass 1/4.
fn pipeline(labels: &[usize], alpha: f64, cost_scale: f64) -> ClassWeights64 {
    let src = two_class_probs(&[0.9, 0.7, 0.2, 0.4]);
    let tgt = two_class_probs(&[1.0, 0.5, 0.0, 0.6]);
    let cost = build_cost_matrix(&src, &tgt).unwrap().scaled(cost_scale).unwrap();
    let plan = solve_exact(&cost, &Marginals::uniform(4, 4)).unwrap();
    assert!((plan.objective - cost_scale * 0.5 * 2f64.sqrt() / 4.0).abs() < 1e-12);
    class_weights(&guide_matrix(&plan, &cost).unwrap(), labels, alpha, 1e-8).unwrap()
}

#[test]
fn balanced_classes() {
    // Class 0 carries guided mass √2·0.2/4, class 1 carries √2·0.3/4.
    let labels = [0, 0, 1, 1];
    for alpha in [0.0, 1.0, 2.0] {
        let w = pipeline(&labels, alpha, 1.0);
        let scale = 2f64.powf(alpha) * 2f64.sqrt();
        assert!((w.get(0).unwrap() - 20.0 / scale).abs() < 1e-12);
        assert!((w.get(1).unwrap() - 40.0 / (3.0 * scale)).abs() < 1e-12);
        let n = normalize_weights(&w, &labels).unwrap();
        assert!((n.get(0).unwrap() - 1.2).abs() < 1e-12);
        assert!((n.get(1).unwrap() - 0.8).abs() < 1e-12);
    }
}

#[test]
fn unbalanced_classes() {
    // Class 0 = rows 0, 1, 3 with mass √2·0.3/4; class 1 = row 2 with √2·0.2/4.
    let labels = [0, 0, 1, 0];
    let w = pipeline(&labels, 2.0, 1.0);
    assert!((w.get(0).unwrap() - 4.0 / (2.7 * 2f64.sqrt())).abs() < 1e-12);
    assert!((w.get(1).unwrap() - 20.0 / 2f64.sqrt()).abs() < 1e-12);

    let n = normalize_weights(&w, &labels).unwrap();
    assert!((n.get(0).unwrap() - 8.0 / 33.0).abs() < 1e-12);
    assert!((n.get(1).unwrap() - 36.0 / 11.0).abs() < 1e-12);

    let mass = weighted_label_distribution(&n, &labels, 2).unwrap();
    assert!((mass[0] - 2.0 / 11.0).abs() < 1e-12);
    assert!((mass[1] - 9.0 / 11.0).abs() < 1e-12);

    let w0 = pipeline(&labels, 0.0, 1.0);
    assert!((w0.get(0).unwrap() / w0.get(1).unwrap() - 2.0 / 3.0).abs() < 1e-12);
    let w1 = pipeline(&labels, 1.0, 1.0);
    assert!((w1.get(0).unwrap() / w1.get(1).unwrap() - 2.0 / 9.0).abs() < 1e-12);
}

#[test]
fn normalized_weights_ignore_cost_scale() {
    let labels = [0, 0, 1, 0];
    let base = normalize_weights(&pipeline(&labels, 2.0, 1.0), &labels).unwrap();
    for c in [1e-3, 0.5, 7.0, 1e4] {
        let scaled = normalize_weights(&pipeline(&labels, 2.0, c), &labels).unwrap();
        for k in 0..2 {
            assert!((scaled.get(k).unwrap() - base.get(k).unwrap()).abs() < 1e-9);
        }
    }
}

#[test]
fn perfect_match_hits_the_floor() {
    let src = two_class_probs(&[1.0, 0.0]);
    let cost = build_cost_matrix(&src, &src).unwrap();
    let plan = solve_exact(&cost, &Marginals::uniform(2, 2)).unwrap();
    let w = class_weights(&guide_matrix(&plan, &cost).unwrap(), &[0, 1], 2.0, 1e-8).unwrap();
    assert_eq!(w.get(0), Some(1e8));
    assert_eq!(w.get(1), Some(1e8));
}

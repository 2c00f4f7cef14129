use serde::{Deserialize, Serialize};

use crate::data::LabeledDataset;
use crate::error::Result;
use crate::nn::AdversarialNets;
use crate::numerics::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub accuracy: f64,
    /// Recall per class; `None` for classes with no samples.
    pub per_class: Vec<Option<f64>>,
    /// Mean of the present per-class entries.
    pub macro_accuracy: f64,
}

/// Arg-max class per row of `G(F(x))`; ties go to the smallest index.
pub fn predict(nets: &AdversarialNets<f64>, x: &Matrix<f64>) -> Result<Vec<usize>> {
    let (feat, _) = nets.encoder.forward(x)?;
    let (logits, _) = nets.classifier.forward(&feat)?;
    Ok(logits
        .iter_rows()
        .map(|row| {
            let mut best = 0;
            for (k, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = k;
                }
            }
            best
        })
        .collect())
}

pub fn evaluate(nets: &AdversarialNets<f64>, ds: &LabeledDataset) -> Result<Evaluation> {
    Ok(score(&predict(nets, ds.features())?, ds.labels(), ds.class_count()))
}

pub(crate) fn score(pred: &[usize], labels: &[usize], classes: usize) -> Evaluation {
    let mut hits = vec![0usize; classes];
    let mut totals = vec![0usize; classes];
    for (&p, &y) in pred.iter().zip(labels) {
        totals[y] += 1;
        if p == y {
            hits[y] += 1;
        }
    }
    let per_class: Vec<Option<f64>> = hits
        .iter()
        .zip(&totals)
        .map(|(&h, &t)| (t > 0).then(|| h as f64 / t as f64))
        .collect();
    let present: Vec<f64> = per_class.iter().flatten().copied().collect();
    Evaluation {
        accuracy: hits.iter().sum::<usize>() as f64 / labels.len() as f64,
        macro_accuracy: present.iter().sum::<f64>() / present.len() as f64,
        per_class,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_predictions() {
        let e = score(&[0, 1, 2, 1], &[0, 1, 2, 1], 3);
        assert_eq!(e.accuracy, 1.0);
        assert_eq!(e.per_class, vec![Some(1.0); 3]);
    }

    #[test]
    fn constant_predictor() {
        let labels: Vec<usize> = (0..8).map(|i| i % 4).collect();
        let e = score(&[0; 8], &labels, 4);
        assert_eq!(e.accuracy, 0.25);
        assert_eq!(e.per_class, vec![Some(1.0), Some(0.0), Some(0.0), Some(0.0)]);
    }

    #[test]
    fn absent_class_excluded_from_macro() {
        let e = score(&[0, 0, 1], &[0, 1, 1], 3);
        assert_eq!(e.per_class[2], None);
        assert_eq!(e.macro_accuracy, 0.75);
    }

    #[test]
    fn single_sample() {
        assert_eq!(score(&[1], &[1], 2).accuracy, 1.0);
        assert_eq!(score(&[0], &[1], 2).accuracy, 0.0);
    }

    #[test]
    fn ties_go_to_smallest_index() {
        use crate::nn::{Activation, Layer, MlpModel};
        let ident = |n: usize, act| {
            MlpModel::from_layers(vec![Layer { weights: Matrix::identity(n), bias: vec![0.0; n] }], act).unwrap()
        };
        let nets = AdversarialNets {
            encoder: ident(3, Activation::Identity),
            classifier: ident(3, Activation::Identity),
            discriminator: MlpModel::from_layers(
                vec![Layer { weights: Matrix::zeros(3, 1), bias: vec![0.0] }],
                Activation::Identity,
            )
            .unwrap(),
        };
        let x = Matrix::from_rows(&[vec![1.0, 1.0, 0.0], vec![0.0, 2.0, 2.0], vec![0.0, 0.0, 0.0]]).unwrap();
        assert_eq!(predict(&nets, &x).unwrap(), vec![0, 1, 0]);
    }
}

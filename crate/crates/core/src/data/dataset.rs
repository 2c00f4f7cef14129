use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    Source,
    Target,
}

/// Feature rows with integer class labels in `0..class_count`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    features: Matrix<f64>,
    labels: Vec<usize>,
    domain: Domain,
    class_count: usize,
}

/// Target features with the labels removed; this is all training ever sees
/// of the target domain.
#[derive(Debug, Clone, PartialEq)]
pub struct UnlabeledDataset {
    features: Matrix<f64>,
}

impl LabeledDataset {
    pub fn new(features: Matrix<f64>, labels: Vec<usize>, domain: Domain, class_count: usize) -> Result<Self> {
        if features.rows() == 0 {
            return Err(Error::invalid("empty dataset"));
        }
        if labels.len() != features.rows() {
            return Err(Error::shape("LabeledDataset", features.rows(), labels.len()));
        }
        if let Some(&y) = labels.iter().find(|&&y| y >= class_count) {
            return Err(Error::invalid(format!("label {y} out of range for {class_count} classes")));
        }
        if !features.is_finite() {
            return Err(Error::NonFinite("LabeledDataset features"));
        }
        Ok(Self {
            features,
            labels,
            domain,
            class_count,
        })
    }

    pub fn features(&self) -> &Matrix<f64> {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.class_count];
        for &y in &self.labels {
            counts[y] += 1;
        }
        counts
    }

    /// Rows `idx`, in that order.
    pub fn subset(&self, idx: &[usize]) -> Result<Self> {
        Self::new(
            self.features.select_rows(idx),
            idx.iter().map(|&i| self.labels[i]).collect(),
            self.domain,
            self.class_count,
        )
    }

    pub fn with_domain(mut self, domain: Domain) -> Self {
        self.domain = domain;
        self
    }

    pub fn strip_labels(&self) -> UnlabeledDataset {
        UnlabeledDataset {
            features: self.features.clone(),
        }
    }
}

impl UnlabeledDataset {
    pub fn features(&self) -> &Matrix<f64> {
        &self.features
    }

    pub fn len(&self) -> usize {
        self.features.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.features.rows() == 0
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        let f = Matrix::from_vec(2, 1, vec![0.0, 1.0]).unwrap();
        assert!(LabeledDataset::new(f.clone(), vec![0, 2], Domain::Source, 2).is_err());
        assert!(LabeledDataset::new(f.clone(), vec![0], Domain::Source, 2).is_err());
        assert!(LabeledDataset::new(Matrix::zeros(0, 1), vec![], Domain::Source, 2).is_err());
        let ds = LabeledDataset::new(f, vec![1, 1], Domain::Target, 3).unwrap();
        assert_eq!(ds.class_counts(), vec![0, 2, 0]);
        assert_eq!(ds.strip_labels().len(), 2);
    }
}

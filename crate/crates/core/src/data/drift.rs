use serde::{Deserialize, Serialize};

use crate::data::dataset::{Domain, LabeledDataset};
use crate::error::{Error, Result};
use crate::numerics::Rng;

/// Per-domain class drop rates, written `[rate_s;rate_t]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriftSpec {
    pub source_drop_rate: f64,
    pub target_drop_rate: f64,
    pub source_classes: Vec<usize>,
    pub target_classes: Vec<usize>,
}

impl DriftSpec {
    /// Drops from the first `⌊C/2⌋` classes in the source and from the
    /// remaining classes in the target.
    pub fn halves(class_count: usize, source_drop_rate: f64, target_drop_rate: f64) -> Self {
        let half = class_count / 2;
        Self {
            source_drop_rate,
            target_drop_rate,
            source_classes: (0..half).collect(),
            target_classes: (half..class_count).collect(),
        }
    }

    pub fn none(class_count: usize) -> Self {
        Self::halves(class_count, 0.0, 0.0)
    }

    pub fn validate(&self, class_count: usize) -> Result<()> {
        for rate in [self.source_drop_rate, self.target_drop_rate] {
            if !(0.0..1.0).contains(&rate) {
                return Err(Error::invalid(format!("drop rate {rate} outside [0, 1)")));
            }
        }
        if let Some(&k) = self.source_classes.iter().chain(&self.target_classes).find(|&&k| k >= class_count) {
            return Err(Error::invalid(format!("drift class {k} out of range for {class_count} classes")));
        }
        Ok(())
    }

    pub fn for_domain(&self, domain: Domain) -> (f64, &[usize]) {
        match domain {
            Domain::Source => (self.source_drop_rate, &self.source_classes),
            Domain::Target => (self.target_drop_rate, &self.target_classes),
        }
    }
}

/// `max(1, round_half_up((1 − rate)·n))`.
pub fn retained_count(n: usize, rate: f64) -> usize {
    (((1.0 - rate) * n as f64 + 0.5).floor() as usize).clamp(1, n.max(1))
}

/// Subsamples the designated classes of `ds` according to its domain's
/// side of `spec`, then shuffles the rows.
pub fn apply_drift(ds: &LabeledDataset, spec: &DriftSpec, seed: u64) -> Result<LabeledDataset> {
    spec.validate(ds.class_count())?;
    let (rate, classes) = spec.for_domain(ds.domain());
    let mut rng = Rng::new(seed);
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); ds.class_count()];
    for (i, &y) in ds.labels().iter().enumerate() {
        by_class[y].push(i);
    }
    let mut designated = vec![false; ds.class_count()];
    for &k in classes {
        if by_class[k].is_empty() {
            return Err(Error::invalid(format!("drift class {k} is absent from the dataset")));
        }
        designated[k] = true;
    }
    let mut keep = Vec::with_capacity(ds.len());
    for (k, idx) in by_class.iter_mut().enumerate() {
        if designated[k] {
            let n = retained_count(idx.len(), rate);
            rng.shuffle(idx);
            keep.extend_from_slice(&idx[..n]);
        } else {
            keep.extend_from_slice(idx);
        }
    }
    keep.sort_unstable();
    rng.shuffle(&mut keep);
    ds.subset(&keep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Matrix;

    fn dataset(classes: usize, per: usize, domain: Domain) -> LabeledDataset {
        let n = classes * per;
        let labels: Vec<usize> = (0..n).map(|i| i / per).collect();
        let feats = Matrix::from_vec(n, 1, (0..n).map(|i| i as f64).collect()).unwrap();
        LabeledDataset::new(feats, labels, domain, classes).unwrap()
    }

    #[test]
    fn rate_zero_only_shuffles() {
        let ds = dataset(4, 10, Domain::Source);
        let out = apply_drift(&ds, &DriftSpec::halves(4, 0.0, 0.0), 3).unwrap();
        assert_eq!(out.len(), ds.len());
        let mut ids: Vec<usize> = out.features().as_slice().iter().map(|&v| v as usize).collect();
        assert_ne!(ids, (0..40).collect::<Vec<_>>());
        ids.sort_unstable();
        assert_eq!(ids, (0..40).collect::<Vec<_>>());
    }

    #[test]
    fn thirty_one_classes() {
        let ds = dataset(31, 20, Domain::Source);
        let spec = DriftSpec::halves(31, 0.75, 0.75);
        let out = apply_drift(&ds, &spec, 0).unwrap();
        let counts = out.class_counts();
        assert!(counts[..15].iter().all(|&c| c == 5));
        assert!(counts[15..].iter().all(|&c| c == 20));
        assert_eq!(out.len(), 395);
    }

    #[test]
    fn target_side_uses_upper_classes() {
        let ds = dataset(4, 20, Domain::Target);
        let out = apply_drift(&ds, &DriftSpec::halves(4, 0.0, 0.5), 0).unwrap();
        assert_eq!(out.class_counts(), vec![20, 20, 10, 10]);
    }

    #[test]
    fn floor_of_one() {
        assert_eq!(retained_count(10, 0.99), 1);
        assert_eq!(retained_count(500, 0.625), 188);
        assert_eq!(retained_count(20, 0.75), 5);
        assert_eq!(retained_count(7, 0.5), 4);
    }

    #[test]
    fn retained_rows_are_unaltered() {
        let ds = dataset(4, 25, Domain::Source);
        let out = apply_drift(&ds, &DriftSpec::halves(4, 0.6, 0.0), 9).unwrap();
        for (row, &y) in out.features().iter_rows().zip(out.labels()) {
            assert_eq!(y, row[0] as usize / 25);
        }
        let mut ids: Vec<f64> = out.features().as_slice().to_vec();
        ids.dedup();
        assert_eq!(ids.len(), out.len());
    }

    #[test]
    fn deterministic_given_seed() {
        let ds = dataset(4, 25, Domain::Source);
        let spec = DriftSpec::halves(4, 0.5, 0.5);
        assert_eq!(apply_drift(&ds, &spec, 1).unwrap(), apply_drift(&ds, &spec, 1).unwrap());
    }

    #[test]
    fn absent_class_and_bad_rate() {
        let ds = dataset(4, 5, Domain::Source).subset(&[10, 11, 12]).unwrap();
        assert!(apply_drift(&ds, &DriftSpec::halves(4, 0.5, 0.0), 0).is_err());
        let ds = dataset(4, 5, Domain::Source);
        assert!(apply_drift(&ds, &DriftSpec::halves(4, 1.0, 0.0), 0).is_err());
    }
}

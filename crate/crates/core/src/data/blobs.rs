use serde::{Deserialize, Serialize};

use crate::data::dataset::{Domain, LabeledDataset};
use crate::data::drift::{apply_drift, DriftSpec};
use crate::error::{Error, Result};
use crate::numerics::{Matrix, Rng};

/// Two-dimensional Gaussian class blobs with a rigid source→target shift.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlobConfig {
    pub class_count: usize,
    /// Samples per class in each domain, before any drift.
    pub per_class: usize,
    /// Class `k` is centred at angle `2πk/C` on a circle of this radius.
    pub radius: f64,
    /// Isotropic per-class standard deviation.
    pub std: f64,
    /// Added to every target class mean after rotation.
    pub shift: [f64; 2],
    /// Rotation of the target class means about the origin, in degrees.
    pub rotation_deg: f64,
}

impl Default for BlobConfig {
    fn default() -> Self {
        Self {
            class_count: 4,
            per_class: 500,
            radius: 6.0,
            std: 1.0,
            shift: [2.0, 0.0],
            rotation_deg: 30.0,
        }
    }
}

impl BlobConfig {
    pub fn validate(&self) -> Result<()> {
        if self.class_count < 2 || self.per_class < 1 || !(self.std > 0.0) {
            return Err(Error::invalid("blob config needs C >= 2, n >= 1, std > 0"));
        }
        if !(self.radius.is_finite() && self.shift.iter().all(|v| v.is_finite()) && self.rotation_deg.is_finite()) {
            return Err(Error::invalid("blob config values must be finite"));
        }
        Ok(())
    }

    pub fn source_mean(&self, k: usize) -> [f64; 2] {
        let angle = 2.0 * std::f64::consts::PI * k as f64 / self.class_count as f64;
        [self.radius * angle.cos(), self.radius * angle.sin()]
    }

    /// Source mean rotated by `rotation_deg`, then shifted.
    pub fn target_mean(&self, k: usize) -> [f64; 2] {
        let [x, y] = self.source_mean(k);
        let (s, c) = self.rotation_deg.to_radians().sin_cos();
        [c * x - s * y + self.shift[0], s * x + c * y + self.shift[1]]
    }
}

/// Balanced source and target blob datasets, each row order shuffled.
///
/// The source draws from stream 0 of `seed`, the target from stream 1.
pub fn gen_blob_pair(cfg: &BlobConfig, seed: u64) -> Result<(LabeledDataset, LabeledDataset)> {
    cfg.validate()?;
    let gen = |domain: Domain, stream: u64| {
        let mut rng = Rng::stream(seed, stream);
        let n = cfg.class_count * cfg.per_class;
        let mut data = Vec::with_capacity(2 * n);
        let mut labels = Vec::with_capacity(n);
        for k in 0..cfg.class_count {
            let mean = match domain {
                Domain::Source => cfg.source_mean(k),
                Domain::Target => cfg.target_mean(k),
            };
            for _ in 0..cfg.per_class {
                data.push(rng.gaussian(mean[0], cfg.std));
                data.push(rng.gaussian(mean[1], cfg.std));
                labels.push(k);
            }
        }
        let ds = LabeledDataset::new(Matrix::from_vec(n, 2, data)?, labels, domain, cfg.class_count)?;
        let order = rng.permutation(n);
        ds.subset(&order)
    };
    Ok((gen(Domain::Source, 0)?, gen(Domain::Target, 1)?))
}

/// Pre- and post-drift datasets for one replicate of the blobs benchmark.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftedPair {
    pub source_clean: LabeledDataset,
    pub target_clean: LabeledDataset,
    pub source: LabeledDataset,
    pub target: LabeledDataset,
}

/// Generates a blob pair from `seed`, then drifts each side with its own
/// seed derived from `seed`.
pub fn gen_drifted_pair(cfg: &BlobConfig, drift: &DriftSpec, seed: u64) -> Result<DriftedPair> {
    drift.validate(cfg.class_count)?;
    let (source_clean, target_clean) = gen_blob_pair(cfg, seed)?;
    let source = apply_drift(&source_clean, drift, derive_seed(seed, 2))?;
    let target = apply_drift(&target_clean, drift, derive_seed(seed, 3))?;
    Ok(DriftedPair {
        source_clean,
        target_clean,
        source,
        target,
    })
}

/// An independent 64-bit seed for sub-component `tag` of a run seeded with `seed`.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    Rng::stream(seed, tag).next_u64()
}


#[cfg(test)]
mod drifted_tests {
    use super::*;

    #[test]
    fn drifted_pair_counts() {
        let cfg = BlobConfig { per_class: 40, ..BlobConfig::default() };
        let pair = gen_drifted_pair(&cfg, &DriftSpec::halves(4, 0.75, 0.75), 0).unwrap();
        assert_eq!(pair.source.class_counts(), vec![10, 10, 40, 40]);
        assert_eq!(pair.target.class_counts(), vec![40, 40, 10, 10]);
        assert_eq!(pair.source_clean.len(), 160);
    }
}

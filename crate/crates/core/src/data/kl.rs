use crate::data::dataset::LabeledDataset;
use crate::error::{Error, Result};

/// Empirical class frequencies with `smoothing` added to every count.
pub fn label_distribution(counts: &[usize], smoothing: f64) -> Vec<f64> {
    let smoothed: Vec<f64> = counts.iter().map(|&c| c as f64 + smoothing).collect();
    let total: f64 = smoothed.iter().sum();
    smoothed.iter().map(|c| c / total).collect()
}

/// `Σ p ln(p/q)` in nats, treating `0 ln 0` as 0.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::shape("kl_divergence", p.len(), q.len()));
    }
    let mut kl = 0.0;
    for (&pi, &qi) in p.iter().zip(q) {
        if pi > 0.0 {
            if qi <= 0.0 {
                return Err(Error::invalid("KL undefined: q has zero mass where p does not"));
            }
            kl += pi * (pi / qi).ln();
        }
    }
    Ok(kl.max(0.0))
}

/// 0 when every class appears in both datasets, add-half otherwise.
pub fn default_smoothing(src: &LabeledDataset, tgt: &LabeledDataset) -> f64 {
    let empty = src.class_counts().iter().chain(&tgt.class_counts()).any(|&c| c == 0);
    if empty {
        0.5
    } else {
        0.0
    }
}

/// KL divergence of the source label distribution from the target one.
pub fn label_kl(src: &LabeledDataset, tgt: &LabeledDataset, smoothing: f64) -> Result<f64> {
    if src.class_count() != tgt.class_count() {
        return Err(Error::shape("label_kl", src.class_count(), tgt.class_count()));
    }
    if !(smoothing >= 0.0 && smoothing.is_finite()) {
        return Err(Error::invalid(format!("smoothing must be >= 0, got {smoothing}")));
    }
    let tgt_counts = tgt.class_counts();
    if smoothing == 0.0 {
        if let Some(k) = tgt_counts.iter().position(|&c| c == 0) {
            return Err(Error::invalid(format!(
                "target class {k} is empty; label_kl needs smoothing > 0"
            )));
        }
    }
    kl_divergence(
        &label_distribution(&src.class_counts(), smoothing),
        &label_distribution(&tgt_counts, smoothing),
    )
}

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{default_smoothing, derive_seed, gen_drifted_pair, label_kl, BlobConfig, DriftSpec};
use crate::error::{Error, Result};
use crate::trainer::config::{Method, TrainConfig};
use crate::trainer::run::{train, TrainOptions};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub blob: BlobConfig,
    pub train: TrainConfig,
    /// Each rate `r` is applied as `[r;r]`.
    pub rates: Vec<f64>,
    pub seeds: Vec<u64>,
    pub methods: Vec<Method>,
    /// α values tried for LMDAN; empty means just `train.alpha`.
    pub alphas: Vec<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            blob: BlobConfig::default(),
            train: TrainConfig::default(),
            rates: vec![0.0, 0.25, 0.5, 0.625, 0.75],
            seeds: (0..5).collect(),
            methods: vec![Method::Lmdan, Method::Dann],
            alphas: Vec::new(),
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        self.blob.validate()?;
        self.train.validate()?;
        if self.rates.is_empty() || self.seeds.is_empty() || self.methods.is_empty() {
            return Err(Error::invalid("sweep needs at least one rate, seed and method"));
        }
        for &r in &self.rates {
            DriftSpec::halves(self.blob.class_count, r, r).validate(self.blob.class_count)?;
        }
        if self.alphas.iter().any(|a| !(*a >= 0.0 && a.is_finite())) {
            return Err(Error::invalid("alphas must be finite and >= 0"));
        }
        Ok(())
    }

    fn cells(&self) -> Vec<(Method, f64, f64, u64)> {
        let alphas = if self.alphas.is_empty() { vec![self.train.alpha] } else { self.alphas.clone() };
        let mut cells = Vec::new();
        for &method in &self.methods {
            let method_alphas = if method == Method::Lmdan { alphas.clone() } else { vec![self.train.alpha] };
            for &alpha in &method_alphas {
                for &rate in &self.rates {
                    for &seed in &self.seeds {
                        cells.push((method, alpha, rate, seed));
                    }
                }
            }
        }
        cells
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub method: Method,
    pub alpha: f64,
    pub rate: f64,
    pub seed: u64,
    pub kl: f64,
    pub accuracy: f64,
    pub per_class: Vec<Option<f64>>,
    pub diverged: bool,
}

/// Runs every (method, α, rate, seed) cell. Cells run in parallel and come
/// back in the order methods → α → rate → seed.
///
/// Replicate `seed` generates its data from `seed` and trains from a seed
/// derived from it, so all methods at one (rate, seed) see the same data and
/// the same initial networks.
pub fn drift_sweep(cfg: &SweepConfig) -> Result<Vec<SweepRow>> {
    cfg.validate()?;
    cfg.cells()
        .into_par_iter()
        .map(|(method, alpha, rate, seed)| {
            let drift = DriftSpec::halves(cfg.blob.class_count, rate, rate);
            let pair = gen_drifted_pair(&cfg.blob, &drift, seed)?;
            let kl = label_kl(&pair.source, &pair.target, default_smoothing(&pair.source, &pair.target))?;
            let train_cfg = TrainConfig {
                alpha,
                seed: derive_seed(seed, 4),
                ..cfg.train.clone()
            };
            let report = train(method, &pair.source, &pair.target, &train_cfg, &TrainOptions::default())?.report;
            Ok(SweepRow {
                method,
                alpha,
                rate,
                seed,
                kl,
                accuracy: report.accuracy,
                per_class: report.per_class_accuracy,
                diverged: report.diverged.is_some(),
            })
        })
        .collect()
}

/// Tidy table: one row per cell, empty per-class cells for absent classes.
pub fn sweep_csv(rows: &[SweepRow], classes: usize) -> String {
    let mut out = String::from("method,alpha,rate,seed,kl,accuracy");
    for k in 0..classes {
        write!(out, ",per_class_{k}").unwrap();
    }
    out.push('\n');
    for r in rows {
        write!(out, "{},{},{},{},{},{}", r.method, r.alpha, r.rate, r.seed, r.kl, r.accuracy).unwrap();
        for k in 0..classes {
            match r.per_class.get(k).copied().flatten() {
                Some(v) => write!(out, ",{v}").unwrap(),
                None => out.push(','),
            }
        }
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub method: Method,
    pub alpha: f64,
    pub rate: f64,
    pub runs: usize,
    pub kl_mean: f64,
    pub accuracy_mean: f64,
    /// Sample standard deviation; 0 for a single run.
    pub accuracy_std: f64,
}

/// Mean and sample standard deviation over seeds, in first-seen group order.
pub fn summarize(rows: &[SweepRow]) -> Vec<SweepSummary> {
    let mut groups: Vec<((Method, u64, u64), Vec<&SweepRow>)> = Vec::new();
    for r in rows {
        let key = (r.method, r.alpha.to_bits(), r.rate.to_bits());
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, g)) => g.push(r),
            None => groups.push((key, vec![r])),
        }
    }
    groups
        .into_iter()
        .map(|(_, g)| {
            let n = g.len() as f64;
            let mean = g.iter().map(|r| r.accuracy).sum::<f64>() / n;
            let var = if g.len() > 1 {
                g.iter().map(|r| (r.accuracy - mean).powi(2)).sum::<f64>() / (n - 1.0)
            } else {
                0.0
            };
            SweepSummary {
                method: g[0].method,
                alpha: g[0].alpha,
                rate: g[0].rate,
                runs: g.len(),
                kl_mean: g.iter().map(|r| r.kl).sum::<f64>() / n,
                accuracy_mean: mean,
                accuracy_std: var.sqrt(),
            }
        })
        .collect()
}

pub fn summary_csv(summary: &[SweepSummary]) -> String {
    let mut out = String::from("method,alpha,rate,runs,kl_mean,accuracy_mean,accuracy_std\n");
    for s in summary {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            s.method, s.alpha, s.rate, s.runs, s.kl_mean, s.accuracy_mean, s.accuracy_std
        )
        .unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> SweepConfig {
        SweepConfig {
            blob: BlobConfig { per_class: 16, ..BlobConfig::default() },
            train: TrainConfig {
                epochs: 2,
                batch: 8,
                encoder: vec![4],
                discriminator: vec![],
                ..TrainConfig::default()
            },
            rates: vec![0.0, 0.5],
            seeds: vec![0, 1],
            methods: vec![Method::Lmdan, Method::Dann],
            alphas: vec![],
        }
    }

    #[test]
    fn row_count_and_order() {
        let rows = drift_sweep(&tiny()).unwrap();
        assert_eq!(rows.len(), 8);
        assert_eq!((rows[0].method, rows[0].rate, rows[0].seed), (Method::Lmdan, 0.0, 0));
        assert_eq!((rows[7].method, rows[7].rate, rows[7].seed), (Method::Dann, 0.5, 1));
        assert_eq!(rows[0].kl, 0.0);
        assert!(rows[2].kl > 0.0);
        let csv = sweep_csv(&rows, 4);
        assert_eq!(csv.lines().count(), 9);
        assert!(csv.starts_with("method,alpha,rate,seed,kl,accuracy,per_class_0,"));
        assert_eq!(summarize(&rows).len(), 4);
    }

    #[test]
    fn alpha_grid() {
        let cfg = SweepConfig { alphas: vec![0.0, 1.0, 2.0, 4.0], rates: vec![0.5], seeds: vec![0], ..tiny() };
        let rows = drift_sweep(&cfg).unwrap();
        assert_eq!(rows.len(), 5);
        assert_eq!(rows.iter().map(|r| r.alpha).collect::<Vec<_>>(), vec![0.0, 1.0, 2.0, 4.0, 2.0]);
    }

    #[test]
    fn empty_seed_list() {
        assert!(drift_sweep(&SweepConfig { seeds: vec![], ..tiny() }).is_err());
    }

    #[test]
    fn summary_statistics() {
        let row = |acc| SweepRow {
            method: Method::Dann,
            alpha: 2.0,
            rate: 0.5,
            seed: 0,
            kl: 0.1,
            accuracy: acc,
            per_class: vec![],
            diverged: false,
        };
        let s = summarize(&[row(0.5), row(0.7)]);
        assert_eq!(s.len(), 1);
        assert!((s[0].accuracy_mean - 0.6).abs() < 1e-15);
        assert!((s[0].accuracy_std - 0.02f64.sqrt()).abs() < 1e-15);
    }
}

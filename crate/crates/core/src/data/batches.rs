use crate::error::{Error, Result};
use crate::numerics::Rng;

/// Row indices of one source mini-batch and its paired target mini-batch.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BatchPair {
    pub source: Vec<usize>,
    pub target: Vec<usize>,
}

/// Equal-size source/target mini-batches drawn without replacement within
/// each epoch. Both domains are reshuffled at the start of every epoch.
#[derive(Debug, Clone)]
pub struct BalancedBatches {
    n_source: usize,
    n_target: usize,
    batch: usize,
    rng: Rng,
}

impl BalancedBatches {
    pub fn new(n_source: usize, n_target: usize, batch: usize, seed: u64) -> Result<Self> {
        if batch == 0 {
            return Err(Error::invalid("batch size must be at least 1"));
        }
        if batch > n_source || batch > n_target {
            return Err(Error::invalid(format!(
                "batch {batch} exceeds domain size (source {n_source}, target {n_target})"
            )));
        }
        Ok(Self {
            n_source,
            n_target,
            batch,
            rng: Rng::new(seed),
        })
    }

    pub fn batch_size(&self) -> usize {
        self.batch
    }

    pub fn pairs_per_epoch(&self) -> usize {
        self.n_source.min(self.n_target) / self.batch
    }

    pub fn next_epoch(&mut self) -> Vec<BatchPair> {
        let src = self.rng.permutation(self.n_source);
        let tgt = self.rng.permutation(self.n_target);
        (0..self.pairs_per_epoch())
            .map(|i| {
                let r = i * self.batch..(i + 1) * self.batch;
                BatchPair {
                    source: src[r.clone()].to_vec(),
                    target: tgt[r].to_vec(),
                }
            })
            .collect()
    }
}

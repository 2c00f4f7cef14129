//! Domain datasets: synthetic drifted blob pairs, the class drop-rate
//! protocol, label-distribution KL, balanced mini-batching and feature CSVs.

mod batches;
mod blobs;
mod csv;
mod dataset;
mod drift;
mod kl;

pub use batches::{BalancedBatches, BatchPair};
pub use blobs::{derive_seed, gen_blob_pair, gen_drifted_pair, BlobConfig, DriftedPair};
pub use csv::{load_feature_csv, save_feature_csv, write_feature_csv};
pub use dataset::{Domain, LabeledDataset, UnlabeledDataset};
pub use drift::{apply_drift, retained_count, DriftSpec};
pub use kl::{default_smoothing, label_distribution, label_kl, kl_divergence};

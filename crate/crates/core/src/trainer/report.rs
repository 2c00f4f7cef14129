use serde::{Deserialize, Serialize};

use crate::trainer::config::{Method, TrainConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean weighted classification loss over the epoch's steps.
    pub l1: f64,
    /// Mean weighted domain loss; absent for source-only training.
    pub l2: Option<f64>,
    pub accuracy: f64,
    pub per_class_accuracy: Vec<Option<f64>>,
    /// `Σ_i v_i [y_i = k] / Σ_i v_i` accumulated over the epoch's batches.
    pub effective_label_distribution: Vec<f64>,
    /// KL of the effective source label distribution from the target one.
    pub label_kl: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub method: Method,
    pub config: TrainConfig,
    pub classes: usize,
    pub steps: usize,
    pub epochs: Vec<EpochRecord>,
    pub accuracy: f64,
    pub macro_accuracy: f64,
    pub per_class_accuracy: Vec<Option<f64>>,
    /// Class weights used on the last batch, `None` for classes absent from it.
    pub final_weights: Vec<Option<f64>>,
    pub effective_label_distribution: Vec<f64>,
    pub target_label_distribution: Vec<f64>,
    pub label_kl_trajectory: Vec<f64>,
    /// Set when training stopped on a non-finite loss; the rest of the
    /// report then describes the last finite model.
    pub diverged: Option<String>,
}

/// Losses of a single optimizer step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub l1: f64,
    pub l2: Option<f64>,
    pub weights: Vec<f64>,
}

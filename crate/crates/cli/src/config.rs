use std::path::{Path, PathBuf};

use lmdan::data::{BlobConfig, DriftSpec};
use lmdan::trainer::{CountSource, Method, OtMode, SweepConfig, TrainConfig};
use lmdan::verify::VerifyConfig;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Every setting of every subcommand, as one flat JSON object.
///
/// Keys not listed here are rejected. Missing keys take the defaults below.
/// Settings a subcommand does not use are still echoed, so an emitted config
/// can be fed back to any subcommand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    /// Top-level seed. Data, drift, initialization and batching streams are
    /// all derived from it.
    pub seed: u64,
    /// Output directory. Not echoed into emitted configs.
    #[serde(skip_serializing)]
    pub out: Option<PathBuf>,

    // Benchmark generation.
    pub class_count: usize,
    pub per_class: usize,
    pub radius: f64,
    pub std: f64,
    pub shift: [f64; 2],
    pub rotation_deg: f64,
    pub source_drop_rate: f64,
    pub target_drop_rate: f64,
    /// Defaults to the first ⌊C/2⌋ classes.
    pub source_classes: Option<Vec<usize>>,
    /// Defaults to the remaining classes.
    pub target_classes: Option<Vec<usize>>,

    // Training. With both CSV paths set, `train` reads them instead of
    // generating the benchmark.
    pub method: Method,
    pub source_csv: Option<PathBuf>,
    pub target_csv: Option<PathBuf>,
    pub epochs: usize,
    pub batch: usize,
    pub lr: f64,
    pub lambda: f64,
    pub alpha: f64,
    pub ot: OtMode,
    pub sinkhorn_eps: f64,
    pub sinkhorn_tol: f64,
    pub sinkhorn_max_iter: usize,
    pub normalize: bool,
    pub count_source: CountSource,
    pub eps_floor: f64,
    pub momentum: f64,
    pub encoder: Vec<usize>,
    pub discriminator: Vec<usize>,

    // Sweeps. Each rate r is applied as [r;r]; replicate s runs with seed `seed + s`.
    pub methods: Vec<Method>,
    pub rates: Vec<f64>,
    pub seeds: Vec<u64>,
    pub alphas: Vec<f64>,

    // Verification.
    pub verify_ot_instances: usize,
    pub verify_sinkhorn_instances: usize,
    pub verify_sinkhorn_eps: f64,
    pub verify_gradient_seeds: Vec<u64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let blob = BlobConfig::default();
        let train = TrainConfig::default();
        let sweep = SweepConfig::default();
        let verify = VerifyConfig::default();
        Self {
            seed: 0,
            out: None,
            class_count: blob.class_count,
            per_class: blob.per_class,
            radius: blob.radius,
            std: blob.std,
            shift: blob.shift,
            rotation_deg: blob.rotation_deg,
            source_drop_rate: 0.75,
            target_drop_rate: 0.75,
            source_classes: None,
            target_classes: None,
            method: Method::Lmdan,
            source_csv: None,
            target_csv: None,
            epochs: train.epochs,
            batch: train.batch,
            lr: train.lr,
            lambda: train.lambda,
            alpha: train.alpha,
            ot: train.ot,
            sinkhorn_eps: train.sinkhorn_eps,
            sinkhorn_tol: train.sinkhorn_tol,
            sinkhorn_max_iter: train.sinkhorn_max_iter,
            normalize: train.normalize,
            count_source: train.count_source,
            eps_floor: train.eps_floor,
            momentum: train.momentum,
            encoder: train.encoder,
            discriminator: train.discriminator,
            methods: sweep.methods,
            rates: sweep.rates,
            seeds: sweep.seeds,
            alphas: sweep.alphas,
            verify_ot_instances: verify.ot_instances,
            verify_sinkhorn_instances: verify.sinkhorn_instances,
            verify_sinkhorn_eps: verify.sinkhorn_eps,
            verify_gradient_seeds: verify.gradient_seeds,
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::usage(format!("invalid config {}: {e}", path.display())))
    }

    pub fn blob(&self) -> BlobConfig {
        BlobConfig {
            class_count: self.class_count,
            per_class: self.per_class,
            radius: self.radius,
            std: self.std,
            shift: self.shift,
            rotation_deg: self.rotation_deg,
        }
    }

    pub fn drift(&self) -> DriftSpec {
        let halves = DriftSpec::halves(self.class_count, self.source_drop_rate, self.target_drop_rate);
        DriftSpec {
            source_classes: self.source_classes.clone().unwrap_or(halves.source_classes),
            target_classes: self.target_classes.clone().unwrap_or(halves.target_classes),
            ..halves
        }
    }

    /// Training settings; `seed` is the already-derived training seed.
    pub fn train(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            batch: self.batch,
            lr: self.lr,
            lambda: self.lambda,
            alpha: self.alpha,
            ot: self.ot,
            sinkhorn_eps: self.sinkhorn_eps,
            sinkhorn_tol: self.sinkhorn_tol,
            sinkhorn_max_iter: self.sinkhorn_max_iter,
            normalize: self.normalize,
            count_source: self.count_source,
            eps_floor: self.eps_floor,
            momentum: self.momentum,
            seed,
            encoder: self.encoder.clone(),
            discriminator: self.discriminator.clone(),
        }
    }

    pub fn sweep(&self) -> SweepConfig {
        SweepConfig {
            blob: self.blob(),
            train: self.train(0),
            rates: self.rates.clone(),
            seeds: self.seeds.iter().map(|s| self.seed.wrapping_add(*s)).collect(),
            methods: self.methods.clone(),
            alphas: self.alphas.clone(),
        }
    }

    pub fn verify(&self) -> VerifyConfig {
        VerifyConfig {
            seed: self.seed,
            ot_instances: self.verify_ot_instances,
            sinkhorn_instances: self.verify_sinkhorn_instances,
            sinkhorn_eps: self.verify_sinkhorn_eps,
            gradient_seeds: self.verify_gradient_seeds.clone(),
        }
    }

    /// Checks everything a subcommand might use before any work starts.
    pub fn validate(&self) -> Result<(), CliError> {
        let usage = |e: lmdan::Error| CliError::usage(e.to_string());
        self.blob().validate().map_err(usage)?;
        self.drift().validate(self.class_count).map_err(usage)?;
        self.train(0).validate().map_err(usage)?;
        if self.source_csv.is_some() != self.target_csv.is_some() {
            return Err(CliError::usage("source_csv and target_csv must be given together"));
        }
        Ok(())
    }
}

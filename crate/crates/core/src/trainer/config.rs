use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::Architecture;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Lmdan,
    Dann,
    SourceOnly,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Lmdan => "lmdan",
            Method::Dann => "dann",
            Method::SourceOnly => "source_only",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lmdan" => Ok(Method::Lmdan),
            "dann" => Ok(Method::Dann),
            "source_only" => Ok(Method::SourceOnly),
            other => Err(Error::invalid(format!(
                "unknown method {other:?} (expected lmdan, dann or source_only)"
            ))),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OtMode {
    Exact,
    Sinkhorn,
}

/// Where the `count_k^α` factor of the class weights takes its counts from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CountSource {
    Batch,
    Dataset,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch: usize,
    /// Base learning rate of both schedules.
    pub lr: f64,
    /// Weight of the adversarial term in the encoder objective.
    pub lambda: f64,
    /// Exponent on the class count in the class weights.
    pub alpha: f64,
    pub ot: OtMode,
    /// Entropic regularization, used only with `ot = sinkhorn`.
    pub sinkhorn_eps: f64,
    /// Marginal L1 error at which Sinkhorn stops.
    pub sinkhorn_tol: f64,
    pub sinkhorn_max_iter: usize,
    /// Rescale class weights to a batch mean of one.
    pub normalize: bool,
    pub count_source: CountSource,
    /// Lower bound on the class-weight denominator.
    pub eps_floor: f64,
    /// Heavy-ball coefficient; 0 is plain SGD.
    pub momentum: f64,
    pub seed: u64,
    pub encoder: Vec<usize>,
    pub discriminator: Vec<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 100,
            batch: 64,
            lr: 0.05,
            lambda: 1.0,
            alpha: 2.0,
            ot: OtMode::Sinkhorn,
            sinkhorn_eps: 0.3,
            sinkhorn_tol: 1e-6,
            sinkhorn_max_iter: 10_000,
            normalize: true,
            count_source: CountSource::Batch,
            eps_floor: crate::weighting::DEFAULT_EPS_FLOOR,
            momentum: 0.0,
            seed: 0,
            encoder: vec![64, 32],
            discriminator: vec![32, 32],
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::invalid(msg.to_string()));
        if self.epochs < 1 {
            return bad("epochs must be >= 1");
        }
        if self.batch < 2 {
            return bad("batch must be >= 2");
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad("lr must be positive and finite");
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return bad("lambda must be >= 0");
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return bad("alpha must be >= 0");
        }
        if self.ot == OtMode::Sinkhorn && !(self.sinkhorn_eps > 0.0 && self.sinkhorn_eps.is_finite()) {
            return bad("sinkhorn_eps must be positive");
        }
        if self.ot == OtMode::Sinkhorn && !(self.sinkhorn_tol > 0.0 && self.sinkhorn_max_iter > 0) {
            return bad("sinkhorn_tol and sinkhorn_max_iter must be positive");
        }
        if !(self.eps_floor > 0.0) {
            return bad("eps_floor must be positive");
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return bad("momentum must be in [0, 1)");
        }
        if self.encoder.is_empty() || self.encoder.iter().chain(&self.discriminator).any(|&w| w == 0) {
            return bad("layer widths must be positive and the encoder non-empty");
        }
        Ok(())
    }

    pub fn architecture(&self, input_dim: usize, classes: usize) -> Architecture {
        Architecture {
            input_dim,
            encoder: self.encoder.clone(),
            classes,
            discriminator: self.discriminator.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_rejects_unknown_keys_and_fills_defaults() {
        let cfg: TrainConfig = serde_json::from_str(r#"{"alpha": 1.0, "ot": "sinkhorn"}"#).unwrap();
        assert_eq!(cfg.alpha, 1.0);
        assert_eq!(cfg.ot, OtMode::Sinkhorn);
        assert_eq!(cfg.epochs, 100);
        assert!(serde_json::from_str::<TrainConfig>(r#"{"alfa": 1.0}"#).is_err());
    }

    #[test]
    fn invariants() {
        assert!(TrainConfig::default().validate().is_ok());
        assert!(TrainConfig { batch: 1, ..Default::default() }.validate().is_err());
        assert!(TrainConfig { epochs: 0, ..Default::default() }.validate().is_err());
        assert!(TrainConfig { lambda: -1.0, ..Default::default() }.validate().is_err());
        assert!(TrainConfig { alpha: -0.5, ..Default::default() }.validate().is_err());
    }

    #[test]
    fn method_names() {
        for m in [Method::Lmdan, Method::Dann, Method::SourceOnly] {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert!("jan".parse::<Method>().is_err());
    }
}

//! JSON checkpoints of the three networks.
//!
//! ```json
//! {
//!   "format": "lmdan-mlp",
//!   "version": 1,
//!   "encoder":       { "sizes": [2, 64, 32], "output_activation": "relu", "layers": [...] },
//!   "classifier":    { ... },
//!   "discriminator": { ... }
//! }
//! ```
//!
//! Each layer is `{ "weights": [...], "bias": [...] }` with `weights` the
//! row-major `in × out` matrix. Values are written with shortest round-trip
//! formatting, so an `f64` model reloads bit for bit.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::mlp::{Activation, Layer, MlpModel};
use crate::nn::step::AdversarialNets;
use crate::numerics::Matrix;
use crate::scalar::Scalar;

pub const CHECKPOINT_FORMAT: &str = "lmdan-mlp";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerRecord {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelRecord {
    pub sizes: Vec<usize>,
    pub output_activation: Activation,
    pub layers: Vec<LayerRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub encoder: ModelRecord,
    pub classifier: ModelRecord,
    pub discriminator: ModelRecord,
}

impl ModelRecord {
    fn from_model<T: Scalar>(m: &MlpModel<T>) -> Self {
        Self {
            sizes: m.sizes(),
            output_activation: m.output_activation(),
            layers: m
                .layers()
                .iter()
                .map(|l| LayerRecord {
                    weights: l.weights.as_slice().iter().map(|v| v.as_f64()).collect(),
                    bias: l.bias.iter().map(|v| v.as_f64()).collect(),
                })
                .collect(),
        }
    }

    fn to_model<T: Scalar>(&self) -> Result<MlpModel<T>> {
        if self.sizes.len() != self.layers.len() + 1 {
            return Err(Error::invalid("checkpoint sizes do not match layer count"));
        }
        let layers = self
            .layers
            .iter()
            .zip(self.sizes.windows(2))
            .map(|(l, s)| {
                Ok(Layer {
                    weights: Matrix::from_vec(s[0], s[1], l.weights.iter().map(|&v| T::of(v)).collect())?,
                    bias: l.bias.iter().map(|&v| T::of(v)).collect(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        MlpModel::from_layers(layers, self.output_activation)
    }
}

impl Checkpoint {
    pub fn from_nets<T: Scalar>(nets: &AdversarialNets<T>) -> Self {
        Self {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            encoder: ModelRecord::from_model(&nets.encoder),
            classifier: ModelRecord::from_model(&nets.classifier),
            discriminator: ModelRecord::from_model(&nets.discriminator),
        }
    }

    pub fn to_nets<T: Scalar>(&self) -> Result<AdversarialNets<T>> {
        if self.format != CHECKPOINT_FORMAT || self.version != CHECKPOINT_VERSION {
            return Err(Error::invalid(format!(
                "unsupported checkpoint {} v{}",
                self.format, self.version
            )));
        }
        Ok(AdversarialNets {
            encoder: self.encoder.to_model()?,
            classifier: self.classifier.to_model()?,
            discriminator: self.discriminator.to_model()?,
        })
    }
}

pub fn save_checkpoint<T: Scalar>(nets: &AdversarialNets<T>, path: &Path) -> Result<()> {
    let json = serde_json::to_string_pretty(&Checkpoint::from_nets(nets))?;
    std::fs::write(path, json + "\n").map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint<T: Scalar>(path: &Path) -> Result<AdversarialNets<T>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let ck: Checkpoint = serde_json::from_str(&text)?;
    ck.to_nets()
}

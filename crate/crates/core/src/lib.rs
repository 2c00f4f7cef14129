//! Label-distribution matching for adversarial domain adaptation.
//!
//! Source samples are re-weighted per class from an optimal transport plan
//! between source and target classifier outputs, and the weights enter both
//! the classification loss and the adversarial domain loss. The crate also
//! carries the source-only and unweighted adversarial baselines, synthetic
//! drifted benchmarks and the oracle checks behind `lmdan verify`.
//!
//! The numeric core (`numerics`, `ot`, `weighting`, `nn`) is generic over
//! [`Scalar`] (`f32` or `f64`); the data pipeline and trainer run in `f64`.

pub mod error;
pub mod numerics;
pub mod ot;
pub mod nn;
pub mod weighting;
pub mod data;
pub mod trainer;
pub mod verify;
mod scalar;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Matrix64 = numerics::Matrix<f64>;
pub type ProbMatrix64 = numerics::ProbMatrix<f64>;
pub type CostMatrix64 = ot::CostMatrix<f64>;
pub type Marginals64 = ot::Marginals<f64>;
pub type TransportPlan64 = ot::TransportPlan<f64>;
pub type SinkhornParams64 = ot::SinkhornParams<f64>;
pub type WeightGuidingMatrix64 = weighting::WeightGuidingMatrix<f64>;
pub type ClassWeights64 = weighting::ClassWeights<f64>;
pub type MlpModel64 = nn::MlpModel<f64>;
pub type AdversarialNets64 = nn::AdversarialNets<f64>;
pub type Momentum64 = nn::Momentum<f64>;

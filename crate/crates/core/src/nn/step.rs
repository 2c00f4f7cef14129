use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::loss::{sigmoid, weighted_cross_entropy, weighted_domain_loss};
use crate::nn::mlp::{Activation, MlpGradients, MlpModel};
use crate::nn::schedule::{lr_classifier, lr_discriminator, ScheduleState};
use crate::numerics::{Matrix, ProbMatrix, Rng};
use crate::scalar::Scalar;

/// Layer widths of the encoder, classifier and discriminator.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Architecture {
    pub input_dim: usize,
    /// Encoder widths after the input; the last one is the feature size.
    pub encoder: Vec<usize>,
    pub classes: usize,
    /// Discriminator hidden widths between the features and its single logit.
    pub discriminator: Vec<usize>,
}

impl Architecture {
    /// `input → 64 → 32` encoder, `32 → C` classifier, `32 → 16 → 1` discriminator.
    pub fn default_for(input_dim: usize, classes: usize) -> Self {
        Self {
            input_dim,
            encoder: vec![64, 32],
            classes,
            discriminator: vec![16],
        }
    }

    pub fn feature_dim(&self) -> usize {
        *self.encoder.last().unwrap_or(&self.input_dim)
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.classes < 2 || self.encoder.is_empty() {
            return Err(Error::invalid(format!("invalid architecture {self:?}")));
        }
        if self.encoder.iter().chain(&self.discriminator).any(|&w| w == 0) {
            return Err(Error::invalid("layer widths must be positive"));
        }
        Ok(())
    }
}

/// Encoder F, classifier G and discriminator D.
#[derive(Debug, Clone, PartialEq)]
pub struct AdversarialNets<T> {
    pub encoder: MlpModel<T>,
    pub classifier: MlpModel<T>,
    pub discriminator: MlpModel<T>,
}

impl<T: Scalar> AdversarialNets<T> {
    /// Encoder features pass through ReLU; the classifier emits logits for a
    /// softmax and the discriminator one logit for a logistic.
    pub fn init(arch: &Architecture, rng: &mut Rng) -> Result<Self> {
        arch.validate()?;
        let mut enc = vec![arch.input_dim];
        enc.extend(&arch.encoder);
        let feat = arch.feature_dim();
        let mut disc = vec![feat];
        disc.extend(&arch.discriminator);
        disc.push(1);
        Ok(Self {
            encoder: MlpModel::init(&enc, Activation::Relu, rng)?,
            classifier: MlpModel::init(&[feat, arch.classes], Activation::Identity, rng)?,
            discriminator: MlpModel::init(&disc, Activation::Identity, rng)?,
        })
    }

    /// Class probabilities `softmax(G(F(x)))`.
    pub fn class_probs(&self, x: &Matrix<T>) -> Result<ProbMatrix<T>> {
        let f = self.encoder.predict(x)?;
        ProbMatrix::from_logits(&self.classifier.predict(&f)?)
    }

    pub fn is_finite(&self) -> bool {
        self.encoder.is_finite() && self.classifier.is_finite() && self.discriminator.is_finite()
    }
}

/// One balanced mini-batch. Target labels never enter a step.
#[derive(Debug, Clone, Copy)]
pub struct StepBatch<'a, T> {
    pub x_src: &'a Matrix<T>,
    pub y_src: &'a [usize],
    pub x_tgt: &'a Matrix<T>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOptions {
    /// When false, D is neither evaluated nor updated and the adversarial
    /// term is dropped (source-only training).
    pub adversarial: bool,
}

/// Heavy-ball velocities `v ← μv + g`, `θ ← θ − rate · v`. With `μ = 0` the
/// update is plain SGD and no state is kept.
#[derive(Debug, Clone)]
pub struct Momentum<T> {
    coef: T,
    velocity: Option<[MlpGradients<T>; 3]>,
}

impl<T: Scalar> Momentum<T> {
    pub fn new(coef: T) -> Self {
        Self { coef, velocity: None }
    }

    pub fn none() -> Self {
        Self::new(T::zero())
    }

    fn direction(&mut self, slot: usize, grads: MlpGradients<T>, nets: &AdversarialNets<T>) -> MlpGradients<T> {
        if self.coef == T::zero() {
            return grads;
        }
        let vel = self.velocity.get_or_insert_with(|| {
            [
                nets.encoder.zero_gradients(),
                nets.classifier.zero_gradients(),
                nets.discriminator.zero_gradients(),
            ]
        });
        let v = &mut vel[slot];
        for (a, b) in v.weights.iter_mut().zip(&grads.weights) {
            for (x, &g) in a.as_mut_slice().iter_mut().zip(b.as_slice()) {
                *x = self.coef * *x + g;
            }
        }
        for (a, b) in v.biases.iter_mut().zip(&grads.biases) {
            for (x, &g) in a.iter_mut().zip(b) {
                *x = self.coef * *x + g;
            }
        }
        v.clone()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepReport<T> {
    /// Weighted classification loss on the source batch.
    pub l1: T,
    /// Weighted domain loss, absent when the step is not adversarial.
    pub l2: Option<T>,
    pub lr_classifier: f64,
    pub lr_discriminator: f64,
}

/// Losses and gradients of the objective at the current parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveGradients<T> {
    pub l1: T,
    pub l2: Option<T>,
    /// `∇_F (L₁ + λL₂)`.
    pub encoder: MlpGradients<T>,
    /// `∇_G L₁`.
    pub classifier: MlpGradients<T>,
    /// `∇_D L₂`, absent when the step is not adversarial.
    pub discriminator: Option<MlpGradients<T>>,
}

impl<T: Scalar> ObjectiveGradients<T> {
    pub fn is_finite(&self) -> bool {
        self.l1.is_finite()
            && self.l2.is_none_or(|v| v.is_finite())
            && self.encoder.is_finite()
            && self.classifier.is_finite()
            && self.discriminator.as_ref().is_none_or(|g| g.is_finite())
    }
}

/// Weighted classification loss `L₁` and domain loss `L₂` without gradients.
pub fn objective_losses<T: Scalar>(
    nets: &AdversarialNets<T>,
    batch: &StepBatch<'_, T>,
    v_src: &[T],
    opts: &StepOptions,
) -> Result<(T, Option<T>)> {
    let feat_src = nets.encoder.predict(batch.x_src)?;
    let probs = ProbMatrix::from_logits(&nets.classifier.predict(&feat_src)?)?;
    let l1 = weighted_cross_entropy(&probs, batch.y_src, v_src)?.loss;
    if !opts.adversarial {
        return Ok((l1, None));
    }
    let feat_tgt = nets.encoder.predict(batch.x_tgt)?;
    let d = |f: &Matrix<T>| -> Result<Vec<T>> {
        Ok(nets.discriminator.predict(f)?.as_slice().iter().map(|&z| sigmoid(z)).collect())
    };
    let l2 = weighted_domain_loss(&d(&feat_src)?, &d(&feat_tgt)?, v_src)?.loss;
    Ok((l1, Some(l2)))
}

/// Backpropagates both losses. When `λ = 0` the domain loss does not reach
/// the encoder at all, so its gradient is exactly that of `L₁`.
pub fn objective_gradients<T: Scalar>(
    nets: &AdversarialNets<T>,
    batch: &StepBatch<'_, T>,
    v_src: &[T],
    lambda: T,
    opts: &StepOptions,
) -> Result<ObjectiveGradients<T>> {
    let use_l2_for_encoder = opts.adversarial && lambda != T::zero();

    let (feat_src, enc_src_cache) = nets.encoder.forward(batch.x_src)?;
    let (logits, cls_cache) = nets.classifier.forward(&feat_src)?;
    let probs = ProbMatrix::from_logits(&logits)?;
    let ce = weighted_cross_entropy(&probs, batch.y_src, v_src)?;
    let (classifier, mut grad_feat_src) = nets.classifier.backward(&cls_cache, &ce.grad_logits)?;

    let mut l2 = None;
    let mut discriminator = None;
    let mut tgt_feature_grad = None;
    if opts.adversarial {
        let (feat_tgt, enc_tgt_cache) = nets.encoder.forward(batch.x_tgt)?;
        let (z_src, disc_src_cache) = nets.discriminator.forward(&feat_src)?;
        let (z_tgt, disc_tgt_cache) = nets.discriminator.forward(&feat_tgt)?;
        let d_src: Vec<T> = z_src.as_slice().iter().map(|&z| sigmoid(z)).collect();
        let d_tgt: Vec<T> = z_tgt.as_slice().iter().map(|&z| sigmoid(z)).collect();
        let dl = weighted_domain_loss(&d_src, &d_tgt, v_src)?;
        let ns = dl.grad_src.len();
        let nt = dl.grad_tgt.len();
        let (mut gd, g_feat_src) = nets
            .discriminator
            .backward(&disc_src_cache, &Matrix::from_vec(ns, 1, dl.grad_src)?)?;
        let (gd_tgt, g_feat_tgt) = nets
            .discriminator
            .backward(&disc_tgt_cache, &Matrix::from_vec(nt, 1, dl.grad_tgt)?)?;
        gd.add_assign(&gd_tgt);
        if use_l2_for_encoder {
            for (g, &h) in grad_feat_src.as_mut_slice().iter_mut().zip(g_feat_src.as_slice()) {
                *g += lambda * h;
            }
            tgt_feature_grad = Some((enc_tgt_cache, g_feat_tgt.scale(lambda)));
        }
        l2 = Some(dl.loss);
        discriminator = Some(gd);
    }

    let (mut encoder, _) = nets.encoder.backward(&enc_src_cache, &grad_feat_src)?;
    if let Some((cache, g)) = tgt_feature_grad {
        encoder.add_assign(&nets.encoder.backward(&cache, &g)?.0);
    }
    Ok(ObjectiveGradients {
        l1: ce.loss,
        l2,
        encoder,
        classifier,
        discriminator,
    })
}

/// One simultaneous update of the min/max objective.
///
/// All gradients are taken at the current parameters, then: D ascends `L₂`
/// at `lr_d(p)`; G descends `L₁` and F descends `L₁ + λL₂`, both at `lr_c(p)`.
/// `v_src` is a constant here; nothing is differentiated through the weights.
pub fn adversarial_step<T: Scalar>(
    nets: &mut AdversarialNets<T>,
    batch: &StepBatch<'_, T>,
    v_src: &[T],
    sched: &ScheduleState,
    opts: &StepOptions,
    momentum: &mut Momentum<T>,
) -> Result<StepReport<T>> {
    let lr_c = lr_classifier(sched);
    let lr_d = lr_discriminator(sched);
    let grads = objective_gradients(nets, batch, v_src, T::of(sched.lambda), opts)?;
    if !grads.is_finite() {
        return Err(Error::Diverged {
            step: 0,
            detail: format!("L1 = {}, L2 = {:?}", grads.l1, grads.l2),
        });
    }

    let enc_dir = momentum.direction(0, grads.encoder, nets);
    let cls_dir = momentum.direction(1, grads.classifier, nets);
    nets.encoder.apply_gradients(&enc_dir, T::of(lr_c));
    nets.classifier.apply_gradients(&cls_dir, T::of(lr_c));
    if let Some(gd) = grads.discriminator {
        // Ascent on L₂ is descent on −L₂.
        let neg = MlpGradients {
            weights: gd.weights.iter().map(|w| w.map(|v| -v)).collect(),
            biases: gd.biases.iter().map(|b| b.iter().map(|&v| -v).collect()).collect(),
        };
        let disc_dir = momentum.direction(2, neg, nets);
        nets.discriminator.apply_gradients(&disc_dir, T::of(lr_d));
    }
    if !nets.is_finite() {
        return Err(Error::Diverged {
            step: 0,
            detail: "parameters became non-finite".into(),
        });
    }
    Ok(StepReport {
        l1: grads.l1,
        l2: grads.l2,
        lr_classifier: lr_c,
        lr_discriminator: lr_d,
    })
}

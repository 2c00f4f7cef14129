use serde::{Deserialize, Serialize};

/// Training progress and the base rates it modulates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduleState {
    /// Fraction of optimization steps completed, in `[0, 1]`.
    pub p: f64,
    /// Base learning rate.
    pub lr: f64,
    /// Weight of the adversarial term in the encoder/classifier objective.
    pub lambda: f64,
}

impl ScheduleState {
    pub fn at_step(step: usize, total_steps: usize, lr: f64, lambda: f64) -> Self {
        let p = if total_steps == 0 {
            0.0
        } else {
            (step as f64 / total_steps as f64).clamp(0.0, 1.0)
        };
        Self { p, lr, lambda }
    }
}

/// `lr · (1 + 10p)^−0.75`.
pub fn lr_classifier(s: &ScheduleState) -> f64 {
    s.lr * (1.0 + 10.0 * s.p).powf(-0.75)
}

/// `lr · (1 − e^{−10p}) / (1 + e^{−10p})`.
pub fn lr_discriminator(s: &ScheduleState) -> f64 {
    let e = (-10.0 * s.p).exp();
    s.lr * (1.0 - e) / (1.0 + e)
}

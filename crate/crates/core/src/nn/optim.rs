//! Adam with the step-annealed learning-rate schedule.

use super::{ParamStore, Real};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub initial_lr: f64,
    /// Multiplier applied every `lr_decay_epochs` epochs.
    pub lr_decay_factor: f64,
    pub lr_decay_epochs: usize,
    pub min_lr: f64,
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub batch_size: usize,
    pub epochs: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            initial_lr: 1.0e-3,
            lr_decay_factor: 0.1,
            lr_decay_epochs: 10,
            min_lr: 1.0e-5,
            weight_decay: 5.0e-4,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            batch_size: 64,
            epochs: 200,
        }
    }
}

impl OptimizerConfig {
    /// `max(min_lr, initial_lr · factor^⌊epoch / every⌋)`.
    pub fn learning_rate(&self, epoch: usize) -> f64 {
        let k = (epoch / self.lr_decay_epochs.max(1)) as i32;
        (self.initial_lr * self.lr_decay_factor.powi(k)).max(self.min_lr)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.initial_lr > 0.0
            && self.min_lr > 0.0
            && self.lr_decay_factor > 0.0
            && self.lr_decay_factor <= 1.0
            && self.weight_decay >= 0.0
            && (0.0..1.0).contains(&self.beta1)
            && (0.0..1.0).contains(&self.beta2)
            && self.epsilon > 0.0
            && self.batch_size > 0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("invalid optimizer settings: {self:?}")))
        }
    }
}

/// One bias-corrected Adam update over every parameter, using the learning
/// rate for `epoch`. The weight-decay term `weight_decay · θ` is added to
/// each gradient before the moment updates. Gradients are cleared after
/// the step. Fails without touching anything if any gradient is missing.
pub fn adam_step<T: Real>(store: &mut ParamStore<T>, cfg: &OptimizerConfig, epoch: usize) -> Result<()> {
    if let Some(p) = store.params.iter().find(|p| p.grad.is_none()) {
        return Err(Error::MissingGradient(p.name.clone()));
    }
    store.step += 1;
    let t = store.step as i32;
    let lr = T::from_f64(cfg.learning_rate(epoch));
    let b1 = T::from_f64(cfg.beta1);
    let b2 = T::from_f64(cfg.beta2);
    let wd = T::from_f64(cfg.weight_decay);
    let eps = T::from_f64(cfg.epsilon);
    let c1 = T::from_f64(1.0 - cfg.beta1.powi(t));
    let c2 = T::from_f64(1.0 - cfg.beta2.powi(t));
    let one = T::one();

    for p in &mut store.params {
        let grad = p.grad.take().expect("checked above");
        let theta = p.value.data_mut();
        let m = p.m.data_mut();
        let v = p.v.data_mut();
        for i in 0..theta.len() {
            let g = grad.data()[i] + wd * theta[i];
            m[i] = b1 * m[i] + (one - b1) * g;
            v[i] = b2 * v[i] + (one - b2) * g * g;
            let mhat = m[i] / c1;
            let vhat = v[i] / c2;
            theta[i] -= lr * mhat / (vhat.sqrt() + eps);
        }
        if !p.value.is_finite() {
            return Err(Error::NonFinite("adam_step"));
        }
    }
    Ok(())
}

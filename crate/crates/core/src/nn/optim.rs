use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use super::{NnError, ParamGroup, ParameterStore};

#[cfg(not(any(feature = "std", test)))]
#[allow(unused_imports)]
use num_traits::Float;

/// Learning-rate schedule: linear warm-up for the ramped groups followed by
/// cosine annealing down to `final_fraction · base_lr`; the other groups stay
/// at `base_lr`.
#[derive(Clone, Debug, PartialEq)]
pub struct ScheduleConfig {
    pub base_lr: f64,
    pub total_iters: usize,
    pub warmup_iters: usize,
    pub final_fraction: f64,
    pub ramped_groups: Vec<ParamGroup>,
}

impl ScheduleConfig {
    pub fn validate(&self) -> Result<(), NnError> {
        if !(self.final_fraction > 0.0 && self.final_fraction <= 1.0) {
            return Err(NnError::InvalidConfig("final_fraction must be in (0, 1]"));
        }
        if self.warmup_iters >= self.total_iters {
            return Err(NnError::InvalidConfig("warmup_iters must be below total_iters"));
        }
        if !(self.base_lr >= 0.0 && self.base_lr.is_finite()) {
            return Err(NnError::InvalidConfig("base_lr must be finite and non-negative"));
        }
        Ok(())
    }

    /// Groups whose rate is ramped and annealed.
    pub fn default_ramped() -> Vec<ParamGroup> {
        vec![ParamGroup::Sdf, ParamGroup::Specular, ParamGroup::Symmetry, ParamGroup::Tau]
    }

    pub fn lr_at(&self, group: ParamGroup, iter: usize) -> f64 {
        if !self.ramped_groups.contains(&group) {
            return self.base_lr;
        }
        if iter < self.warmup_iters {
            return self.base_lr * iter as f64 / self.warmup_iters as f64;
        }
        let span = (self.total_iters - self.warmup_iters).max(1) as f64;
        let progress = ((iter - self.warmup_iters) as f64 / span).min(1.0);
        let floor = self.final_fraction * self.base_lr;
        floor + (self.base_lr - floor) * 0.5 * (1.0 + (PI * progress).cos())
    }
}

pub fn lr_at(sched: &ScheduleConfig, group: ParamGroup, iter: usize) -> f64 {
    sched.lr_at(group, iter)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig { beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

/// Bias-corrected Adam with per-slice learning rates.
#[derive(Clone, Debug, PartialEq)]
pub struct Adam {
    pub config: AdamConfig,
    pub first_moment: Vec<f64>,
    pub second_moment: Vec<f64>,
    pub steps: u64,
}

impl Adam {
    pub fn new(config: AdamConfig, len: usize) -> Self {
        Adam { config, first_moment: vec![0.0; len], second_moment: vec![0.0; len], steps: 0 }
    }

    /// Learning rate of each float in the store, resolved through its slice's group.
    pub fn step_with(&mut self, store: &mut ParameterStore, grads: &[f64], lr_of: impl Fn(ParamGroup) -> f64) -> Result<(), NnError> {
        if grads.len() != store.len() || self.first_moment.len() != store.len() {
            return Err(NnError::DimensionMismatch { what: "optimizer state", expected: store.len(), got: grads.len() });
        }
        if let Some(i) = grads.iter().position(|g| !g.is_finite()) {
            let name = store.slices().iter().find(|s| s.range.contains(&i)).map(|s| s.name.clone()).unwrap_or_default();
            return Err(NnError::NonFinite { index: i, slice: name });
        }
        self.steps += 1;
        let AdamConfig { beta1, beta2, eps } = self.config;
        let t = self.steps as i32;
        let c1 = 1.0 - beta1.powi(t);
        let c2 = 1.0 - beta2.powi(t);
        let slices: Vec<_> = store.slices().iter().map(|s| (s.range.clone(), s.group)).collect();
        let values = store.values_mut();
        for (range, group) in slices {
            let lr = lr_of(group);
            for i in range {
                let g = grads[i];
                let m = beta1 * self.first_moment[i] + (1.0 - beta1) * g;
                let v = beta2 * self.second_moment[i] + (1.0 - beta2) * g * g;
                self.first_moment[i] = m;
                self.second_moment[i] = v;
                let m_hat = m / c1;
                let v_hat = v / c2;
                values[i] -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }

    pub fn adam_step(&mut self, store: &mut ParameterStore, grads: &[f64], sched: &ScheduleConfig, iter: usize) -> Result<(), NnError> {
        self.step_with(store, grads, |g| sched.lr_at(g, iter))
    }
}

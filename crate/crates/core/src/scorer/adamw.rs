//! AdamW with global-norm gradient clipping and an optional cosine schedule.

use serde::{Deserialize, Serialize};

pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const EPSILON: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Scheduler {
    #[default]
    Constant,
    /// Linear warmup over the first `warmup_fraction` of steps, then cosine
    /// decay to zero.
    CosineWithWarmup { warmup_fraction: f64 },
}

impl Scheduler {
    pub fn learning_rate(&self, base: f64, step: usize, total_steps: usize) -> f64 {
        match *self {
            Scheduler::Constant => base,
            Scheduler::CosineWithWarmup { warmup_fraction } => {
                let total = total_steps.max(1) as f64;
                let warmup = (warmup_fraction * total).round();
                let s = step as f64;
                if s < warmup {
                    base * (s + 1.0) / warmup
                } else {
                    let progress = ((s - warmup) / (total - warmup).max(1.0)).min(1.0);
                    0.5 * base * (1.0 + (std::f64::consts::PI * progress).cos())
                }
            }
        }
    }
}

/// Rescales `grads` in place so their Euclidean norm is at most `max_norm`;
/// returns the norm before clipping.
pub fn clip_grad_norm(grads: &mut [f64], max_norm: f64) -> f64 {
    let norm = grads.iter().map(|g| g * g).sum::<f64>().sqrt();
    if norm > max_norm && norm > 0.0 {
        let scale = max_norm / norm;
        grads.iter_mut().for_each(|g| *g *= scale);
    }
    norm
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamW {
    first: Vec<f64>,
    second: Vec<f64>,
    step: u64,
}

impl AdamW {
    pub fn new(num_params: usize) -> Self {
        Self {
            first: vec![0.0; num_params],
            second: vec![0.0; num_params],
            step: 0,
        }
    }

    pub fn steps_taken(&self) -> u64 {
        self.step
    }

    /// Clips `grads` to `clip_norm`, then applies one decoupled-decay update.
    pub fn step(&mut self, params: &mut [f64], grads: &mut [f64], lr: f64, weight_decay: f64, clip_norm: f64) {
        assert_eq!(params.len(), self.first.len());
        assert_eq!(grads.len(), self.first.len());
        clip_grad_norm(grads, clip_norm);
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - BETA1.powi(t);
        let c2 = 1.0 - BETA2.powi(t);
        for i in 0..params.len() {
            let g = grads[i];
            self.first[i] = BETA1 * self.first[i] + (1.0 - BETA1) * g;
            self.second[i] = BETA2 * self.second[i] + (1.0 - BETA2) * g * g;
            let m_hat = self.first[i] / c1;
            let v_hat = self.second[i] / c2;
            params[i] -= lr * weight_decay * params[i];
            params[i] -= lr * m_hat / (v_hat.sqrt() + EPSILON);
        }
    }
}

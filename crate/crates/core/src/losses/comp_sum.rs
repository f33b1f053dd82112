//! The comp-sum multiclass family and the augmented surrogate built on it.
//!
//! For label `l` let `R = sum_i exp(s_i - s_l)`. Then
//! `Phi^tau(s, l) = log R` at `tau = 1` and `(R^(1-tau) - 1) / (1 - tau)`
//! otherwise. Both branches are evaluated through `log R`, computed after
//! subtracting the maximum score, so large uniform scores never overflow.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, shape, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct TauParameter(f64);

impl TauParameter {
    pub const LOGISTIC: TauParameter = TauParameter(1.0);

    pub fn new(tau: f64) -> Result<Self> {
        if tau.is_finite() && tau >= 0.0 {
            Ok(Self(tau))
        } else {
            Err(invalid(format!("tau must be a finite value >= 0, got {tau}")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for TauParameter {
    type Error = Error;
    fn try_from(v: f64) -> Result<Self> {
        Self::new(v)
    }
}

impl From<TauParameter> for f64 {
    fn from(t: TauParameter) -> f64 {
        t.0
    }
}

/// One score per composite action, in flat action order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreVector(pub Vec<f64>);

impl ScoreVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Softmax probabilities and `log sum exp(s - max)`.
fn softmax(scores: &[f64]) -> (Vec<f64>, f64, f64) {
    let m = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut p: Vec<f64> = scores.iter().map(|s| (s - m).exp()).collect();
    let total: f64 = p.iter().sum();
    p.iter_mut().for_each(|x| *x /= total);
    (p, total.ln(), m)
}

/// `(R^(1-tau) - 1) / (1 - tau)` and `R^(1-tau)` given `log R`.
fn branch(log_ratio: f64, tau: f64) -> (f64, f64) {
    if tau == 1.0 {
        (log_ratio, 1.0)
    } else {
        let e = (1.0 - tau) * log_ratio;
        (e.exp_m1() / (1.0 - tau), e.exp())
    }
}

pub fn comp_sum(scores: &[f64], label: usize, tau: TauParameter) -> Result<(f64, Vec<f64>)> {
    if label >= scores.len() {
        return Err(Error::OutOfRange {
            what: "label",
            index: label,
            bound: scores.len(),
        });
    }
    let (p, log_total, m) = softmax(scores);
    let log_ratio = log_total - (scores[label] - m);
    let (value, scale) = branch(log_ratio, tau.value());
    let mut grad: Vec<f64> = p.iter().map(|pi| scale * pi).collect();
    grad[label] -= scale;
    Ok((value, grad))
}

/// `sum_i weights[i] * Phi^tau(s, i)` with its gradient.
pub fn augmented_surrogate(scores: &[f64], weights: &[f64], tau: TauParameter) -> Result<(f64, Vec<f64>)> {
    let mut grad = vec![0.0; scores.len()];
    let value = augmented_surrogate_into(scores, weights, tau, &mut grad)?;
    Ok((value, grad))
}

/// Same as [`augmented_surrogate`] but writes the gradient into `grad`.
pub fn augmented_surrogate_into(
    scores: &[f64],
    weights: &[f64],
    tau: TauParameter,
    grad: &mut [f64],
) -> Result<f64> {
    if weights.len() != scores.len() || grad.len() != scores.len() {
        return Err(shape(format!(
            "{} scores, {} weights, {} gradient slots",
            scores.len(),
            weights.len(),
            grad.len()
        )));
    }
    if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
        return Err(invalid(format!("surrogate weights must be non-negative, got {w}")));
    }
    let (p, log_total, m) = softmax(scores);
    let mut value = 0.0;
    // d/ds_j = p_j * sum_i w_i R_i^(1-tau) - w_j R_j^(1-tau)
    let mut mass = 0.0;
    for (i, &w) in weights.iter().enumerate() {
        let (v, scale) = branch(log_total - (scores[i] - m), tau.value());
        value += w * v;
        mass += w * scale;
        grad[i] = -w * scale;
    }
    for (g, pj) in grad.iter_mut().zip(&p) {
        *g += pj * mass;
    }
    Ok(value)
}

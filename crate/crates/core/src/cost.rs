//! Executed-pair cost tables, their additive decomposition, advice masking and
//! the true deferral-advice loss.

use serde::{Deserialize, Serialize};

use crate::action::{CompositeAction, CompositeActionSpace};
use crate::error::{invalid, shape, Error, Result};

/// A `J x (K+1)` table of executed costs `c_{j,k}`, stored row-major in flat
/// action order, with an explicit upper bound `C`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostTable {
    space: CompositeActionSpace,
    costs: Vec<f64>,
    bound: f64,
}

impl CostTable {
    pub fn new(space: CompositeActionSpace, costs: Vec<f64>, bound: f64) -> Result<Self> {
        if !(bound.is_finite() && bound > 0.0) {
            return Err(invalid(format!("cost bound must be positive, got {bound}")));
        }
        if costs.len() != space.len() {
            return Err(shape(format!(
                "cost table has {} entries, action space has {}",
                costs.len(),
                space.len()
            )));
        }
        if let Some((i, c)) = costs
            .iter()
            .enumerate()
            .find(|(_, c)| !(c.is_finite() && **c >= 0.0 && **c <= bound))
        {
            return Err(invalid(format!("cost entry {i} = {c} outside [0, {bound}]")));
        }
        Ok(Self { space, costs, bound })
    }

    /// Builds a table from expert rows of equal length `K + 1`.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R], bound: f64) -> Result<Self> {
        let j = rows.len();
        let width = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        if j == 0 || width == 0 {
            return Err(shape("cost table needs at least one row and one column"));
        }
        if rows.iter().any(|r| r.as_ref().len() != width) {
            return Err(shape("ragged cost table rows"));
        }
        let space = CompositeActionSpace::new(j, width - 1)?;
        let costs = rows.iter().flat_map(|r| r.as_ref().iter().copied()).collect();
        Self::new(space, costs, bound)
    }

    pub fn space(&self) -> CompositeActionSpace {
        self.space
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    /// Costs in flat action order.
    pub fn as_slice(&self) -> &[f64] {
        &self.costs
    }

    pub fn row(&self, expert: usize) -> &[f64] {
        let w = self.space.row_len();
        &self.costs[expert * w..(expert + 1) * w]
    }

    pub fn get(&self, action: CompositeAction) -> Result<f64> {
        Ok(self.costs[self.space.flatten(action)?])
    }

    /// The `k = 0` column as a `J x 1` table (standard deferral costs).
    pub fn no_advice_slice(&self) -> CostTable {
        let costs = (0..self.space.num_experts()).map(|j| self.row(j)[0]).collect();
        CostTable {
            space: self.space.no_advice(),
            costs,
            bound: self.bound,
        }
    }

    /// Adds `multiplier * gamma_base[k]` to every entry of column `k`.
    pub fn with_advice_fees(&self, gamma_base: &[f64], multiplier: f64) -> Result<CostTable> {
        if gamma_base.len() != self.space.row_len() {
            return Err(shape(format!(
                "gamma_base has {} entries, expected {}",
                gamma_base.len(),
                self.space.row_len()
            )));
        }
        let max_fee = gamma_base.iter().fold(0.0f64, |a, &b| a.max(b));
        let w = self.space.row_len();
        let costs = self
            .costs
            .iter()
            .enumerate()
            .map(|(i, c)| c + multiplier * gamma_base[i % w])
            .collect();
        CostTable::new(self.space, costs, self.bound + multiplier * max_fee)
    }
}

/// The four ingredients of an executed cost:
/// `c_{j,k} = psi[j][k] + beta[j] + lambda * gamma_base[k]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostComponents {
    /// Realized task losses in `[0, 1]`, `J` rows of `K + 1`.
    pub task_loss: Vec<Vec<f64>>,
    pub expert_fees: Vec<f64>,
    /// Base advice fees; entry 0 (no advice) must be zero.
    pub advice_fees: Vec<f64>,
    pub cost_multiplier: f64,
}

impl CostComponents {
    pub fn validate(&self) -> Result<CompositeActionSpace> {
        let j = self.task_loss.len();
        if j == 0 {
            return Err(shape("task_loss has no rows"));
        }
        let width = self.task_loss[0].len();
        if width == 0 || self.task_loss.iter().any(|r| r.len() != width) {
            return Err(shape("task_loss rows must be non-empty and equal length"));
        }
        if self.expert_fees.len() != j {
            return Err(shape(format!(
                "expert_fees has {} entries for {j} experts",
                self.expert_fees.len()
            )));
        }
        if self.advice_fees.len() != width {
            return Err(shape(format!(
                "advice_fees has {} entries for {width} advice actions",
                self.advice_fees.len()
            )));
        }
        if self.advice_fees[0] != 0.0 {
            return Err(invalid("advice fee of the no-advice action must be 0"));
        }
        if self
            .task_loss
            .iter()
            .flatten()
            .any(|&p| !(p.is_finite() && (0.0..=1.0).contains(&p)))
        {
            return Err(invalid("task losses must lie in [0, 1]"));
        }
        if self
            .expert_fees
            .iter()
            .chain(&self.advice_fees)
            .any(|&f| !(f.is_finite() && f >= 0.0))
        {
            return Err(invalid("fees must be non-negative"));
        }
        if !(self.cost_multiplier.is_finite() && self.cost_multiplier >= 0.0) {
            return Err(invalid("cost multiplier must be non-negative"));
        }
        CompositeActionSpace::new(j, width - 1)
    }
}

/// Assembles `c_{j,k} = psi + beta_j + lambda * gamma_k` with bound
/// `C = 1 + max beta + lambda * max gamma`.
pub fn assemble_cost_table(components: &CostComponents) -> Result<CostTable> {
    let space = components.validate()?;
    let lambda = components.cost_multiplier;
    let costs = components
        .task_loss
        .iter()
        .zip(&components.expert_fees)
        .flat_map(|(row, beta)| {
            row.iter()
                .zip(&components.advice_fees)
                .map(move |(psi, gamma)| psi + beta + lambda * gamma)
        })
        .collect();
    let max_beta = components.expert_fees.iter().fold(0.0f64, |a, &b| a.max(b));
    let max_gamma = components.advice_fees.iter().fold(0.0f64, |a, &b| a.max(b));
    CostTable::new(space, costs, 1.0 + max_beta + lambda * max_gamma)
}

/// Advice with at most one revealed slot; `None` is the masked symbol.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskedAdvice<T> {
    slots: Vec<Option<T>>,
}

impl<T> MaskedAdvice<T> {
    pub fn slots(&self) -> &[Option<T>] {
        &self.slots
    }

    /// The revealed source index (1-based) and its payload, if any.
    pub fn revealed(&self) -> Option<(usize, &T)> {
        self.slots
            .iter()
            .enumerate()
            .find_map(|(i, s)| s.as_ref().map(|p| (i + 1, p)))
    }
}

/// Reveals source `k` (1-based) of `full_advice` and masks every other slot;
/// `k = 0` masks everything.
pub fn mask_advice<T: Clone>(full_advice: &[T], k: usize) -> Result<MaskedAdvice<T>> {
    if k > full_advice.len() {
        return Err(Error::OutOfRange {
            what: "advice",
            index: k,
            bound: full_advice.len() + 1,
        });
    }
    let slots = full_advice
        .iter()
        .enumerate()
        .map(|(i, a)| (i + 1 == k).then(|| a.clone()))
        .collect();
    Ok(MaskedAdvice { slots })
}

/// The true deferral-advice loss: the cost of the executed pair.
pub fn true_loss(action: CompositeAction, table: &CostTable) -> Result<f64> {
    table.get(action)
}

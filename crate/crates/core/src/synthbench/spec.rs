//! Two-region environment: `x` uniform on `[-1, 1]^2`, region by the sign of
//! `x_1`, one conditional executed-cost table per region.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::action::{CompositeAction, CompositeActionSpace};
use crate::bayes::bayes_policy;
use crate::cost::CostTable;
use crate::dataset::{Dataset, FeeSchedule};
use crate::error::{invalid, Result};

/// Region index of `x_1 < 0`.
pub const REGION_MINUS: usize = 0;
/// Region index of `x_1 >= 0`.
pub const REGION_PLUS: usize = 1;
pub const REGION_NAMES: [&str; 2] = ["R-", "R+"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionSpec {
    /// Conditional table on `x_1 < 0`, rows = experts, columns = advice.
    pub table_minus: [[f64; 2]; 2],
    /// Conditional table on `x_1 >= 0`.
    pub table_plus: [[f64; 2]; 2],
    /// Fixed fee added to every queried action.
    pub advice_fee: f64,
}

impl Default for RegionSpec {
    fn default() -> Self {
        Self {
            table_minus: [[0.38, 1.08], [0.50, 0.51]],
            table_plus: [[0.55, 0.18], [0.30, 0.90]],
            advice_fee: 0.08,
        }
    }
}

pub fn region_of(x: &[f64]) -> usize {
    if x[0] < 0.0 {
        REGION_MINUS
    } else {
        REGION_PLUS
    }
}

impl RegionSpec {
    pub fn space() -> CompositeActionSpace {
        CompositeActionSpace::new(2, 1).expect("2 x 2")
    }

    /// Upper bound of any realized cost, `1 + fee`.
    pub fn bound(&self) -> f64 {
        1.0 + self.advice_fee
    }

    pub fn table(&self, region: usize) -> [[f64; 2]; 2] {
        if region == REGION_MINUS {
            self.table_minus
        } else {
            self.table_plus
        }
    }

    pub fn cost_table(&self, region: usize) -> Result<CostTable> {
        CostTable::from_rows(&self.table(region), self.bound())
    }

    /// Every conditional mean must be a Bernoulli task-loss mean plus the
    /// fixed fee: `T - fee in [0, 1]` for queried entries, `T in [0, 1]`
    /// otherwise.
    pub fn validate(&self) -> Result<()> {
        if !(self.advice_fee.is_finite() && self.advice_fee >= 0.0) {
            return Err(invalid(format!("advice fee must be >= 0, got {}", self.advice_fee)));
        }
        for (name, t) in [("table_minus", self.table_minus), ("table_plus", self.table_plus)] {
            for (j, row) in t.iter().enumerate() {
                for (k, &c) in row.iter().enumerate() {
                    let p = c - self.fee(k);
                    if !(p.is_finite() && (0.0..=1.0).contains(&p)) {
                        return Err(invalid(format!(
                            "{name}[{j}][{k}] = {c} is not a Bernoulli mean plus fee {} (p = {p})",
                            self.fee(k)
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    fn fee(&self, advice: usize) -> f64 {
        if advice > 0 {
            self.advice_fee
        } else {
            0.0
        }
    }
}

/// Draws `n` instances. For every action, the realized cost is
/// `fee + Bernoulli(T - fee)`, so its conditional mean is exactly `T`.
pub fn generate(n: usize, seed: u64, spec: &RegionSpec) -> Result<Dataset> {
    spec.validate()?;
    if n == 0 {
        return Err(invalid("need at least one instance"));
    }
    let space = RegionSpec::space();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut features = Vec::with_capacity(2 * n);
    let mut tables = Vec::with_capacity(n);
    let mut tags = Vec::with_capacity(n);
    for _ in 0..n {
        let x = [rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0)];
        let region = region_of(&x);
        let t = spec.table(region);
        let costs = space
            .actions()
            .map(|a| {
                let fee = spec.fee(a.advice);
                let p = t[a.expert][a.advice] - fee;
                let hit = rng.gen::<f64>() < p;
                fee + if hit { 1.0 } else { 0.0 }
            })
            .collect();
        features.extend_from_slice(&x);
        tables.push(CostTable::new(space, costs, spec.bound())?);
        tags.push(region);
    }
    Ok(Dataset::new(2, features, tables, Some(tags))?.with_fees(FeeSchedule {
        expert_fees: vec![0.0, 0.0],
        advice_fees: vec![0.0, spec.advice_fee],
        cost_multiplier: 1.0,
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BayesReference {
    pub risk: f64,
    pub action_minus: CompositeAction,
    pub action_plus: CompositeAction,
    /// Best risk when restricted to the no-advice column.
    pub no_advice_risk: f64,
    pub no_advice_minus: CompositeAction,
    pub no_advice_plus: CompositeAction,
}

impl BayesReference {
    pub fn action(&self, region: usize) -> CompositeAction {
        if region == REGION_MINUS {
            self.action_minus
        } else {
            self.action_plus
        }
    }

    pub fn no_advice_action(&self, region: usize) -> CompositeAction {
        if region == REGION_MINUS {
            self.no_advice_minus
        } else {
            self.no_advice_plus
        }
    }
}

/// Per-region Bayes actions and the analytic Bayes risk (regions have equal
/// probability).
pub fn bayes_reference(spec: &RegionSpec) -> Result<BayesReference> {
    spec.validate()?;
    let minus = bayes_policy(&spec.cost_table(REGION_MINUS)?);
    let plus = bayes_policy(&spec.cost_table(REGION_PLUS)?);
    let l2d_minus = bayes_policy(&spec.cost_table(REGION_MINUS)?.no_advice_slice());
    let l2d_plus = bayes_policy(&spec.cost_table(REGION_PLUS)?.no_advice_slice());
    Ok(BayesReference {
        risk: 0.5 * (minus.bayes_risk + plus.bayes_risk),
        action_minus: minus.executed,
        action_plus: plus.executed,
        no_advice_risk: 0.5 * (l2d_minus.bayes_risk + l2d_plus.bayes_risk),
        no_advice_minus: l2d_minus.executed,
        no_advice_plus: l2d_plus.executed,
    })
}

//! Exact Bayes oracle on conditional (or realized) cost tables, plus the
//! mismatch decomposition that underlies the augmented surrogate.
//!
//! All argmins break ties toward the smallest flat index, i.e. the smallest
//! expert and then the smallest advice index.

use serde::{Deserialize, Serialize};

use crate::action::{CompositeAction, CompositeActionSpace};
use crate::cost::CostTable;
use crate::error::{invalid, shape, Error, Result};

/// Index of the first minimum.
pub(crate) fn argmin(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v < values[best] {
            best = i;
        }
    }
    best
}

/// Index of the first maximum.
pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BayesDecision {
    pub router: usize,
    /// Best advice index for every expert row.
    pub query_per_expert: Vec<usize>,
    pub executed: CompositeAction,
    pub bayes_risk: f64,
}

/// A router plus one query decision per expert. Only the routed expert's query
/// is ever executed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SequentialDecision {
    pub router: usize,
    pub queries: Vec<usize>,
}

impl SequentialDecision {
    pub fn to_composite(&self) -> CompositeAction {
        CompositeAction::new(self.router, self.queries[self.router])
    }
}

pub fn bayes_query(table: &CostTable, expert: usize) -> Result<usize> {
    let sp = table.space();
    if expert >= sp.num_experts() {
        return Err(Error::OutOfRange {
            what: "expert",
            index: expert,
            bound: sp.num_experts(),
        });
    }
    Ok(argmin(table.row(expert)))
}

pub fn bayes_policy(table: &CostTable) -> BayesDecision {
    let sp = table.space();
    let query_per_expert: Vec<usize> = (0..sp.num_experts()).map(|j| argmin(table.row(j))).collect();
    let row_min: Vec<f64> = query_per_expert
        .iter()
        .enumerate()
        .map(|(j, &k)| table.row(j)[k])
        .collect();
    let router = argmin(&row_min);
    BayesDecision {
        router,
        executed: CompositeAction::new(router, query_per_expert[router]),
        bayes_risk: row_min[router],
        query_per_expert,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AdviceWorth {
    pub worth: bool,
    pub best_advice: usize,
}

/// Decides whether any advice source pays for itself: source `k` is worth it
/// iff its task-loss reduction `psi[0] - psi[k]` strictly exceeds its fee.
pub fn advice_worth(task_losses: &[f64], fees: &[f64]) -> Result<AdviceWorth> {
    if task_losses.is_empty() || task_losses.len() != fees.len() {
        return Err(shape(format!(
            "{} task losses vs {} fees",
            task_losses.len(),
            fees.len()
        )));
    }
    if fees[0] != 0.0 {
        return Err(invalid("no-advice fee must be zero"));
    }
    let worth = (1..fees.len()).any(|k| task_losses[0] - task_losses[k] > fees[k]);
    let best_advice = if worth {
        let totals: Vec<f64> = task_losses.iter().zip(fees).map(|(p, g)| p + g).collect();
        argmin(&totals)
    } else {
        0
    };
    Ok(AdviceWorth { worth, best_advice })
}

/// `(min over all pairs, min over the no-advice column)`.
pub fn dominance_check(table: &CostTable) -> (f64, f64) {
    let sp = table.space();
    let with_advice = table.as_slice().iter().copied().fold(f64::INFINITY, f64::min);
    let l2d = (0..sp.num_experts())
        .map(|j| table.row(j)[0])
        .fold(f64::INFINITY, f64::min);
    (with_advice, l2d)
}

/// `c_i = offset + sum_{i' != i} weights[i']` with `weights[i] = max_cost - c_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MismatchDecomposition {
    pub max_cost: f64,
    pub offset: f64,
    pub weights: Vec<f64>,
}

impl MismatchDecomposition {
    pub fn weight_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Loss of action `i` rebuilt from the decomposition.
    pub fn reconstruct(&self, i: usize) -> f64 {
        let others: f64 = self
            .weights
            .iter()
            .enumerate()
            .filter(|&(i2, _)| i2 != i)
            .map(|(_, w)| w)
            .sum();
        self.offset + others
    }
}

pub fn mismatch_decompose_slice(costs: &[f64]) -> MismatchDecomposition {
    let max_cost = costs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights = costs.iter().map(|c| max_cost - c).collect();
    let total: f64 = costs.iter().sum();
    MismatchDecomposition {
        max_cost,
        offset: total - (costs.len() as f64 - 1.0) * max_cost,
        weights,
    }
}

pub fn mismatch_decompose(table: &CostTable) -> MismatchDecomposition {
    mismatch_decompose_slice(table.as_slice())
}

/// The conditional augmented risk as `||w||_1` times a multiclass risk under
/// label distribution `p`, plus an offset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedReduction {
    pub weight_mass: f64,
    pub label_distribution: Vec<f64>,
    pub offset: f64,
}

pub fn weighted_reduction(mean_weights: &[f64], mean_offset: f64) -> Result<WeightedReduction> {
    if mean_weights.is_empty() {
        return Err(shape("empty weight vector"));
    }
    if let Some(w) = mean_weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
        return Err(invalid(format!("weights must be non-negative, got {w}")));
    }
    let weight_mass: f64 = mean_weights.iter().sum();
    let label_distribution = if weight_mass > 0.0 {
        mean_weights.iter().map(|w| w / weight_mass).collect()
    } else {
        vec![1.0 / mean_weights.len() as f64; mean_weights.len()]
    };
    Ok(WeightedReduction {
        weight_mass,
        label_distribution,
        offset: mean_offset,
    })
}

/// Brute-force reference: first action of minimal cost in flat order.
pub fn brute_force_argmin(table: &CostTable) -> CompositeAction {
    let sp: CompositeActionSpace = table.space();
    sp.unflatten(argmin(table.as_slice())).expect("argmin within space")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::{assemble_cost_table, true_loss, CostComponents};
    use proptest::prelude::*;

    fn running() -> CostTable {
        CostTable::from_rows(
            &[[0.32, 0.41, 0.36], [0.35, 0.27, 0.40], [0.38, 0.33, 0.24]],
            1.0,
        )
        .unwrap()
    }

    fn worked() -> CostTable {
        CostTable::from_rows(
            &[[0.35, 0.42, 0.38], [0.40, 0.20, 0.45], [0.50, 0.48, 0.25]],
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn query_on_running_table() {
        let t = running();
        assert_eq!(bayes_query(&t, 2).unwrap(), 2);
        assert_eq!(bayes_query(&t, 0).unwrap(), 0);
        assert_eq!(bayes_query(&t, 1).unwrap(), 1);
        assert!(bayes_query(&t, 3).is_err());
        let flat = CostTable::from_rows(&[[0.4, 0.4, 0.4]], 1.0).unwrap();
        assert_eq!(bayes_query(&flat, 0).unwrap(), 0);
    }

    #[test]
    fn policy_on_running_table() {
        let d = bayes_policy(&running());
        assert_eq!(d.query_per_expert, vec![0, 1, 2]);
        assert_eq!(d.router, 2);
        assert_eq!(d.executed, CompositeAction::new(2, 2));
        assert_eq!(d.bayes_risk, 0.24);
    }

    #[test]
    fn policy_on_synthetic_tables() {
        let minus = CostTable::from_rows(&[[0.38, 1.08], [0.50, 0.51]], 1.08).unwrap();
        let d = bayes_policy(&minus);
        assert_eq!(d.executed, CompositeAction::new(0, 0));
        assert_eq!(d.bayes_risk, 0.38);
        let plus = CostTable::from_rows(&[[0.55, 0.18], [0.30, 0.90]], 1.08).unwrap();
        let d = bayes_policy(&plus);
        assert_eq!(d.executed, CompositeAction::new(0, 1));
        assert_eq!(d.bayes_risk, 0.18);
    }

    #[test]
    fn advice_worth_examples() {
        let w = advice_worth(&[0.50, 0.30], &[0.0, 0.15]).unwrap();
        assert_eq!(w, AdviceWorth { worth: true, best_advice: 1 });
        let w = advice_worth(&[0.50, 0.30], &[0.0, 0.25]).unwrap();
        assert_eq!(w, AdviceWorth { worth: false, best_advice: 0 });
        let w = advice_worth(&[0.4, 0.4, 0.4], &[0.0, 0.0, 0.0]).unwrap();
        assert!(!w.worth);
        assert!(advice_worth(&[0.4, 0.4], &[0.1, 0.0]).is_err());
        assert!(advice_worth(&[0.4], &[0.0, 0.0]).is_err());
    }

    #[test]
    fn dominance_examples() {
        assert_eq!(dominance_check(&running()), (0.24, 0.32));
        let col0 = CostTable::from_rows(&[[0.1, 0.3], [0.5, 0.2]], 1.0).unwrap();
        let (a, b) = dominance_check(&col0);
        assert_eq!(a, b);
    }

    #[test]
    fn mismatch_on_worked_table() {
        let t = worked();
        let m = mismatch_decompose(&t);
        assert_eq!(m.max_cost, 0.50);
        assert!((m.offset - (-0.57)).abs() < 1e-12);
        assert!((m.weights[0] - 0.15).abs() < 1e-12);
        assert!((m.weight_mass() - 1.07).abs() < 1e-12);
        let rebuilt = m.reconstruct(0);
        assert!((rebuilt - 0.35).abs() < 1e-12);
        assert!((rebuilt - true_loss(CompositeAction::new(0, 0), &t).unwrap()).abs() < 1e-12);
        assert!(m.weights.iter().all(|&w| w >= 0.0));
        assert!(m.weights.iter().any(|&w| w == 0.0));
    }

    #[test]
    fn mismatch_on_constant_table() {
        let t = CostTable::from_rows(&[[0.3, 0.3], [0.3, 0.3]], 1.0).unwrap();
        let m = mismatch_decompose(&t);
        assert!(m.weights.iter().all(|&w| w == 0.0));
        assert!((m.offset - 0.3).abs() < 1e-15);
        for i in 0..4 {
            assert!((m.reconstruct(i) - 0.3).abs() < 1e-15);
        }
    }

    #[test]
    fn weighted_reduction_cases() {
        let r = weighted_reduction(&[1.0, 1.0, 2.0, 0.0], 0.0).unwrap();
        assert_eq!(r.weight_mass, 4.0);
        assert_eq!(r.label_distribution, vec![0.25, 0.25, 0.5, 0.0]);
        let r = weighted_reduction(&[0.0; 6], 0.1).unwrap();
        assert!(r.label_distribution.iter().all(|&p| (p - 1.0 / 6.0).abs() < 1e-15));
        let r = weighted_reduction(&[0.0, 0.7, 0.0], 0.0).unwrap();
        assert_eq!(r.label_distribution, vec![0.0, 1.0, 0.0]);
        assert!(weighted_reduction(&[0.1, -0.1], 0.0).is_err());
    }

    fn table_strategy() -> impl Strategy<Value = CostTable> {
        (1usize..=4, 0usize..=3).prop_flat_map(|(j, k)| {
            // Coarse grid so ties actually occur.
            proptest::collection::vec(0u8..=10, j * (k + 1)).prop_map(move |v| {
                let sp = CompositeActionSpace::new(j, k).unwrap();
                CostTable::new(sp, v.into_iter().map(|x| x as f64 / 10.0).collect(), 1.0).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn policy_matches_brute_force(t in table_strategy()) {
            let d = bayes_policy(&t);
            prop_assert_eq!(d.executed, brute_force_argmin(&t));
            prop_assert_eq!(d.bayes_risk, t.get(d.executed).unwrap());
            for (j, &k) in d.query_per_expert.iter().enumerate() {
                prop_assert_eq!(k, bayes_query(&t, j).unwrap());
            }
        }

        #[test]
        fn dominance_always_holds(t in table_strategy()) {
            let (a, b) = dominance_check(&t);
            prop_assert!(a <= b);
        }

        #[test]
        fn reconstruction_is_exact(t in table_strategy()) {
            let m = mismatch_decompose(&t);
            for i in 0..t.space().len() {
                let c = t.as_slice()[i];
                prop_assert!((m.reconstruct(i) - c).abs() <= 1e-12 * c.abs().max(1.0));
            }
        }

        #[test]
        fn advice_worth_agrees_with_bayes_query(
            psi in proptest::collection::vec(0.0f64..1.0, 4),
            gamma_tail in proptest::collection::vec(0.0f64..0.3, 3),
            beta in 0.0f64..0.1,
        ) {
            let mut gamma = vec![0.0];
            gamma.extend(gamma_tail);
            let comps = CostComponents {
                task_loss: vec![psi.clone()],
                expert_fees: vec![beta],
                advice_fees: gamma.clone(),
                cost_multiplier: 1.0,
            };
            let t = assemble_cost_table(&comps).unwrap();
            let w = advice_worth(&psi, &gamma).unwrap();
            let q = bayes_query(&t, 0).unwrap();
            prop_assert_eq!(!w.worth, q == 0);
            if w.worth {
                prop_assert_eq!(w.best_advice, q);
            }
        }

        #[test]
        fn sequential_and_composite_agree(
            t in table_strategy(),
            seed in any::<u64>(),
        ) {
            let sp = t.space();
            let router = (seed as usize) % sp.num_experts();
            let queries: Vec<usize> = (0..sp.num_experts())
                .map(|j| ((seed >> (8 + j)) as usize) % sp.row_len())
                .collect();
            let seq = SequentialDecision { router, queries: queries.clone() };
            let composite = seq.to_composite();
            let sequential_loss = t.row(router)[queries[router]];
            prop_assert_eq!(true_loss(composite, &t).unwrap(), sequential_loss);
        }
    }
}

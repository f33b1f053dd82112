//! Held-out evaluation of decoded actions and grid decision maps.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::action::CompositeAction;
use crate::dataset::Dataset;
use crate::error::{shape, Result};
use crate::scorer::CompiledPolicy;
use crate::synthbench::spec::{region_of, BayesReference, REGION_NAMES};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionMetrics {
    pub region: String,
    pub count: usize,
    pub risk: f64,
    /// Percentage of instances whose action equals the region's Bayes action.
    pub bayes_match: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub count: usize,
    /// Mean realized cost of the executed actions.
    pub risk: f64,
    /// Standard error of `risk`.
    pub risk_std_error: f64,
    /// `risk - bayes_risk`, when a reference is supplied.
    pub excess: Option<f64>,
    /// Percentage of instances with `k >= 1`.
    pub advice_rate: f64,
    pub bayes_match: Option<f64>,
    /// Count of every selected action, in flat order.
    pub selection_histogram: Vec<usize>,
    pub regions: Option<Vec<RegionMetrics>>,
}

/// Decodes every instance of `data` with `policy`.
pub fn decode_all(policy: &CompiledPolicy<'_>, data: &Dataset) -> Result<Vec<CompositeAction>> {
    (0..data.len())
        .into_par_iter()
        .map(|i| policy.decode(data.feature(i)))
        .collect()
}

/// Executes `actions` on `data`. With a reference and region tags, also reports
/// excess risk, Bayes-action match and the per-region breakdown.
pub fn evaluate_actions(
    actions: &[CompositeAction],
    data: &Dataset,
    reference: Option<&BayesReference>,
) -> Result<Metrics> {
    if actions.len() != data.len() {
        return Err(shape(format!("{} actions for {} instances", actions.len(), data.len())));
    }
    let space = data.space();
    let n = data.len();
    let mut hist = vec![0usize; space.len()];
    let mut total = 0.0;
    let mut total_sq = 0.0;
    let mut queried = 0usize;
    for (i, &a) in actions.iter().enumerate() {
        let c = data.table(i).get(a)?;
        total += c;
        total_sq += c * c;
        hist[space.flatten(a)?] += 1;
        queried += usize::from(a.queries());
    }
    let nf = n as f64;
    let risk = total / nf;
    let var = (total_sq / nf - risk * risk).max(0.0);

    let tagged = data.region_tags().zip(reference);
    let (bayes_match, regions) = match tagged {
        Some((tags, r)) => {
            let mut count = [0usize; 2];
            let mut cost = [0.0; 2];
            let mut hits = [0usize; 2];
            for (i, (&a, &t)) in actions.iter().zip(tags).enumerate() {
                let t = t.min(1);
                count[t] += 1;
                cost[t] += data.table(i).get(a)?;
                hits[t] += usize::from(a == r.action(t));
            }
            let regions = (0..2)
                .map(|t| RegionMetrics {
                    region: REGION_NAMES[t].to_owned(),
                    count: count[t],
                    risk: if count[t] > 0 { cost[t] / count[t] as f64 } else { f64::NAN },
                    bayes_match: if count[t] > 0 {
                        100.0 * hits[t] as f64 / count[t] as f64
                    } else {
                        f64::NAN
                    },
                })
                .collect();
            (Some(100.0 * (hits[0] + hits[1]) as f64 / nf), Some(regions))
        }
        None => (None, None),
    };

    Ok(Metrics {
        count: n,
        risk,
        risk_std_error: (var / nf).sqrt(),
        excess: reference.map(|r| risk - r.risk),
        advice_rate: 100.0 * queried as f64 / nf,
        bayes_match,
        selection_histogram: hist,
        regions,
    })
}

pub fn evaluate(policy: &CompiledPolicy<'_>, data: &Dataset, reference: Option<&BayesReference>) -> Result<Metrics> {
    evaluate_actions(&decode_all(policy, data)?, data, reference)
}

/// The Bayes action of each instance's region.
pub fn bayes_actions(data: &Dataset, reference: &BayesReference) -> Vec<CompositeAction> {
    (0..data.len())
        .map(|i| {
            let region = data.region_tags().map(|t| t[i]).unwrap_or_else(|| region_of(data.feature(i)));
            reference.action(region)
        })
        .collect()
}

/// Decoded flat action indices on a `resolution x resolution` grid over
/// `[-1, 1]^2`. Row `r` holds `x_2 = -1 + 2r/(res-1)`, column `c` holds
/// `x_1 = -1 + 2c/(res-1)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecisionMap {
    pub resolution: usize,
    pub cells: Vec<usize>,
}

impl DecisionMap {
    pub fn coordinate(resolution: usize, index: usize) -> f64 {
        -1.0 + 2.0 * index as f64 / (resolution - 1) as f64
    }

    pub fn row(&self, r: usize) -> &[usize] {
        &self.cells[r * self.resolution..(r + 1) * self.resolution]
    }

    /// Fraction of cells on which two maps agree.
    pub fn agreement(&self, other: &DecisionMap) -> f64 {
        let same = self.cells.iter().zip(&other.cells).filter(|(a, b)| a == b).count();
        same as f64 / self.cells.len() as f64
    }
}

pub fn decision_map<F>(decide: F, resolution: usize) -> Result<DecisionMap>
where
    F: Fn(&[f64]) -> Result<usize> + Sync,
{
    if resolution < 2 {
        return Err(shape("grid resolution must be at least 2"));
    }
    let cells = (0..resolution * resolution)
        .into_par_iter()
        .map(|i| {
            let x = [
                DecisionMap::coordinate(resolution, i % resolution),
                DecisionMap::coordinate(resolution, i / resolution),
            ];
            decide(&x)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DecisionMap { resolution, cells })
}

/// Decision map of a trained policy.
pub fn policy_decision_map(policy: &CompiledPolicy<'_>, resolution: usize) -> Result<DecisionMap> {
    let space = crate::synthbench::RegionSpec::space();
    decision_map(|x| space.flatten(policy.decode(x)?), resolution)
}

/// Decision map of the Bayes rule.
pub fn bayes_decision_map(reference: &BayesReference, resolution: usize) -> Result<DecisionMap> {
    let space = crate::synthbench::RegionSpec::space();
    decision_map(|x| space.flatten(reference.action(region_of(x))), resolution)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthbench::spec::{bayes_reference, generate, RegionSpec};

    #[test]
    fn oracle_and_constant_policies() {
        let spec = RegionSpec::default();
        let r = bayes_reference(&spec).unwrap();
        let d = generate(40_000, 21, &spec).unwrap();
        let m = evaluate_actions(&bayes_actions(&d, &r), &d, Some(&r)).unwrap();
        assert_eq!(m.bayes_match, Some(100.0));
        assert!((m.risk - 0.280).abs() < 4.0 * m.risk_std_error + 1e-3);
        let constant = vec![CompositeAction::new(0, 0); d.len()];
        let c = evaluate_actions(&constant, &d, Some(&r)).unwrap();
        assert_eq!(c.advice_rate, 0.0);
        assert!((c.risk - 0.465).abs() < 4.0 * c.risk_std_error + 1e-3);
        assert!(m.risk <= c.risk + 3.0 * m.risk_std_error);
        assert_eq!(c.selection_histogram, vec![d.len(), 0, 0, 0]);
        let regions = c.regions.unwrap();
        assert_eq!(regions[0].bayes_match, 100.0);
        assert_eq!(regions[1].bayes_match, 0.0);
    }

    #[test]
    fn missing_tags_omit_regions() {
        let spec = RegionSpec::default();
        let d = generate(100, 1, &spec).unwrap();
        let untagged = crate::Dataset::new(2, d.features().to_vec(), d.tables().to_vec(), None).unwrap();
        let m = evaluate_actions(&vec![CompositeAction::new(1, 1); 100], &untagged, None).unwrap();
        assert!(m.regions.is_none() && m.bayes_match.is_none() && m.excess.is_none());
        assert_eq!(m.advice_rate, 100.0);
        assert!(evaluate_actions(&[CompositeAction::new(0, 0)], &untagged, None).is_err());
    }

    #[test]
    fn maps() {
        let r = bayes_reference(&RegionSpec::default()).unwrap();
        let m = bayes_decision_map(&r, 21).unwrap();
        for row in 0..21 {
            let cells = m.row(row);
            assert!(cells[..10].iter().all(|&c| c == 0));
            assert!(cells[10..].iter().all(|&c| c == 1));
        }
        let constant = decision_map(|_| Ok(3), 5).unwrap();
        assert!(constant.cells.iter().all(|&c| c == 3));
        assert!(decision_map(|_| Ok(0), 1).is_err());
        assert_eq!(m.agreement(&m), 1.0);
    }
}

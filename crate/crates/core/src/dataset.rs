use serde::{Deserialize, Serialize};

use crate::action::CompositeActionSpace;
use crate::cost::CostTable;
use crate::error::{invalid, shape, Result};

/// Fee parameters recorded alongside a dataset's precomputed costs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeeSchedule {
    pub expert_fees: Vec<f64>,
    pub advice_fees: Vec<f64>,
    pub cost_multiplier: f64,
}

/// Featurized instances with their realized executed-pair cost tables.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    space: CompositeActionSpace,
    feature_dim: usize,
    features: Vec<f64>,
    cost_tables: Vec<CostTable>,
    region_tags: Option<Vec<usize>>,
    fees: Option<FeeSchedule>,
}

impl Dataset {
    /// `features` is row-major `n x feature_dim`.
    pub fn new(
        feature_dim: usize,
        features: Vec<f64>,
        cost_tables: Vec<CostTable>,
        region_tags: Option<Vec<usize>>,
    ) -> Result<Self> {
        let n = cost_tables.len();
        let space = match cost_tables.first() {
            Some(t) => t.space(),
            None => return Err(invalid("dataset is empty")),
        };
        if cost_tables.iter().any(|t| t.space() != space) {
            return Err(shape("cost tables do not share one action space"));
        }
        if features.len() != n * feature_dim {
            return Err(shape(format!(
                "features hold {} values, expected {n} x {feature_dim}",
                features.len()
            )));
        }
        if features.iter().any(|x| !x.is_finite()) {
            return Err(invalid("non-finite feature value"));
        }
        if let Some(tags) = &region_tags {
            if tags.len() != n {
                return Err(shape(format!("{} region tags for {n} instances", tags.len())));
            }
        }
        Ok(Self {
            space,
            feature_dim,
            features,
            cost_tables,
            region_tags,
            fees: None,
        })
    }

    pub fn with_fees(mut self, fees: FeeSchedule) -> Self {
        self.fees = Some(fees);
        self
    }

    pub fn len(&self) -> usize {
        self.cost_tables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cost_tables.is_empty()
    }

    pub fn space(&self) -> CompositeActionSpace {
        self.space
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn feature(&self, i: usize) -> &[f64] {
        &self.features[i * self.feature_dim..(i + 1) * self.feature_dim]
    }

    pub fn table(&self, i: usize) -> &CostTable {
        &self.cost_tables[i]
    }

    pub fn tables(&self) -> &[CostTable] {
        &self.cost_tables
    }

    pub fn region_tags(&self) -> Option<&[usize]> {
        self.region_tags.as_deref()
    }

    pub fn fees(&self) -> Option<&FeeSchedule> {
        self.fees.as_ref()
    }

    /// The same instances with only the no-advice column kept.
    pub fn restrict_no_advice(&self) -> Dataset {
        Dataset {
            space: self.space.no_advice(),
            feature_dim: self.feature_dim,
            features: self.features.clone(),
            cost_tables: self.cost_tables.iter().map(CostTable::no_advice_slice).collect(),
            region_tags: self.region_tags.clone(),
            fees: None,
        }
    }

    /// Row-wise mean of every executed cost, in flat action order.
    pub fn mean_costs(&self) -> Vec<f64> {
        let mut acc = vec![0.0; self.space.len()];
        for t in &self.cost_tables {
            for (a, c) in acc.iter_mut().zip(t.as_slice()) {
                *a += c;
            }
        }
        let n = self.len() as f64;
        acc.iter_mut().for_each(|a| *a /= n);
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(a: f64, b: f64) -> CostTable {
        CostTable::from_rows(&[[a, b]], 1.0).unwrap()
    }

    #[test]
    fn construction_checks_shapes() {
        assert!(Dataset::new(1, vec![0.0, 1.0], vec![t(0.1, 0.2), t(0.3, 0.4)], None).is_ok());
        assert!(Dataset::new(2, vec![0.0, 1.0], vec![t(0.1, 0.2), t(0.3, 0.4)], None).is_err());
        assert!(Dataset::new(1, vec![], vec![], None).is_err());
        let other = CostTable::from_rows(&[[0.1], [0.2]], 1.0).unwrap();
        assert!(Dataset::new(0, vec![], vec![t(0.1, 0.2), other], None).is_err());
        assert!(Dataset::new(0, vec![], vec![t(0.1, 0.2)], Some(vec![0, 1])).is_err());
    }

    #[test]
    fn restriction_and_means() {
        let d = Dataset::new(0, vec![], vec![t(0.1, 0.2), t(0.3, 0.4)], None).unwrap();
        let m = d.mean_costs();
        assert!((m[0] - 0.2).abs() < 1e-15 && (m[1] - 0.3).abs() < 1e-15);
        let r = d.restrict_no_advice();
        assert_eq!(r.space().len(), 1);
        assert_eq!(r.table(1).as_slice(), &[0.3]);
    }
}

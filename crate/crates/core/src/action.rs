//! Composite actions: an executed (expert, advice) pair and its flat index.
//!
//! Flat indices are expert-major, `i = j * (K + 1) + k`, so each expert's
//! advice options occupy one contiguous block of `K + 1` slots.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The product set `[J] x {0..=K}` of executable expert/advice pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CompositeActionSpace {
    num_experts: usize,
    num_advice: usize,
}

/// Route to expert `expert` and reveal advice source `advice` (0 = none).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CompositeAction {
    pub expert: usize,
    pub advice: usize,
}

impl CompositeAction {
    pub const fn new(expert: usize, advice: usize) -> Self {
        Self { expert, advice }
    }

    pub fn queries(&self) -> bool {
        self.advice > 0
    }
}

impl std::fmt::Display for CompositeAction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{})", self.expert, self.advice)
    }
}

impl CompositeActionSpace {
    pub fn new(num_experts: usize, num_advice: usize) -> Result<Self> {
        if num_experts == 0 {
            return Err(Error::Invalid("action space needs at least one expert".into()));
        }
        Ok(Self {
            num_experts,
            num_advice,
        })
    }

    pub fn num_experts(&self) -> usize {
        self.num_experts
    }

    /// Number of advice sources `K`; advice indices run over `0..=K`.
    pub fn num_advice(&self) -> usize {
        self.num_advice
    }

    /// Columns per expert row, `K + 1`.
    pub fn row_len(&self) -> usize {
        self.num_advice + 1
    }

    /// `|Π| = J (K + 1)`.
    pub fn len(&self) -> usize {
        self.num_experts * self.row_len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, action: CompositeAction) -> bool {
        action.expert < self.num_experts && action.advice <= self.num_advice
    }

    pub fn flatten(&self, action: CompositeAction) -> Result<usize> {
        if action.expert >= self.num_experts {
            return Err(Error::OutOfRange {
                what: "expert",
                index: action.expert,
                bound: self.num_experts,
            });
        }
        if action.advice > self.num_advice {
            return Err(Error::OutOfRange {
                what: "advice",
                index: action.advice,
                bound: self.num_advice + 1,
            });
        }
        Ok(action.expert * self.row_len() + action.advice)
    }

    pub fn unflatten(&self, index: usize) -> Result<CompositeAction> {
        if index >= self.len() {
            return Err(Error::OutOfRange {
                what: "flat action",
                index,
                bound: self.len(),
            });
        }
        Ok(CompositeAction::new(index / self.row_len(), index % self.row_len()))
    }

    /// All actions in flat-index order.
    pub fn actions(&self) -> impl Iterator<Item = CompositeAction> + '_ {
        (0..self.len()).map(move |i| CompositeAction::new(i / self.row_len(), i % self.row_len()))
    }

    /// The same experts with advice removed (`K = 0`).
    pub fn no_advice(&self) -> Self {
        Self {
            num_experts: self.num_experts,
            num_advice: 0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn flatten_examples() {
        let sp = CompositeActionSpace::new(3, 2).unwrap();
        assert_eq!(sp.flatten(CompositeAction::new(0, 0)).unwrap(), 0);
        assert_eq!(sp.flatten(CompositeAction::new(2, 2)).unwrap(), 8);
        assert_eq!(sp.flatten(CompositeAction::new(1, 0)).unwrap(), 3);
    }

    #[test]
    fn flatten_is_bijection_on_small_space() {
        let sp = CompositeActionSpace::new(3, 2).unwrap();
        let mut seen = [false; 9];
        for j in 0..3 {
            for k in 0..3 {
                let i = sp.flatten(CompositeAction::new(j, k)).unwrap();
                assert!(!seen[i]);
                seen[i] = true;
                assert_eq!(sp.unflatten(i).unwrap(), CompositeAction::new(j, k));
            }
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn out_of_range_is_rejected() {
        let sp = CompositeActionSpace::new(3, 2).unwrap();
        assert!(matches!(
            sp.flatten(CompositeAction::new(3, 0)),
            Err(Error::OutOfRange { what: "expert", .. })
        ));
        assert!(sp.flatten(CompositeAction::new(0, 3)).is_err());
        assert!(sp.unflatten(9).is_err());
        assert!(CompositeActionSpace::new(0, 1).is_err());
    }

    proptest! {
        #[test]
        fn round_trip(j in 1usize..=8, k in 0usize..=8) {
            let sp = CompositeActionSpace::new(j, k).unwrap();
            prop_assert_eq!(sp.actions().count(), j * (k + 1));
            for (i, a) in sp.actions().enumerate() {
                prop_assert_eq!(sp.flatten(a).unwrap(), i);
                prop_assert_eq!(sp.unflatten(i).unwrap(), a);
            }
        }
    }
}

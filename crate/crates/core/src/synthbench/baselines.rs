//! Reference policies: best fixed pair and the randomization ablations.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::action::CompositeAction;
use crate::bayes::argmin;
use crate::dataset::Dataset;
use crate::error::{invalid, Result};
use crate::scorer::CompiledPolicy;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Baseline {
    /// Constant action minimizing the train-set mean realized cost.
    BestFixedPair,
    /// Learned expert, advice drawn uniformly from `[K]_0`.
    LearnedExpertRandomAdvice,
    /// Uniform expert, advice the learned policy would request for it.
    RandomExpertLearnedAdvice,
    /// Uniform expert, never query.
    RandomRouteNoAdvice,
    /// Uniform over all composite actions.
    RandomPair,
}

impl Baseline {
    pub const ALL: [Baseline; 5] = [
        Baseline::BestFixedPair,
        Baseline::LearnedExpertRandomAdvice,
        Baseline::RandomExpertLearnedAdvice,
        Baseline::RandomRouteNoAdvice,
        Baseline::RandomPair,
    ];

    /// Baselines reported in the synthetic benchmark tables.
    pub const SYNTHETIC: [Baseline; 3] =
        [Baseline::BestFixedPair, Baseline::RandomRouteNoAdvice, Baseline::RandomPair];

    pub fn name(self) -> &'static str {
        match self {
            Baseline::BestFixedPair => "best_fixed_pair",
            Baseline::LearnedExpertRandomAdvice => "learned_expert_random_advice",
            Baseline::RandomExpertLearnedAdvice => "random_expert_learned_advice",
            Baseline::RandomRouteNoAdvice => "random_route_no_advice",
            Baseline::RandomPair => "random_pair",
        }
    }

    pub fn needs_policy(self) -> bool {
        matches!(self, Baseline::LearnedExpertRandomAdvice | Baseline::RandomExpertLearnedAdvice)
    }
}

impl std::fmt::Display for Baseline {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Baseline {
    type Err = crate::error::Error;
    fn from_str(s: &str) -> Result<Self> {
        Baseline::ALL
            .into_iter()
            .find(|b| b.name() == s)
            .ok_or_else(|| invalid(format!("unknown baseline {s:?}")))
    }
}

/// Train-set argmin of the mean realized cost (first minimizer on ties).
pub fn best_fixed_pair(train: &Dataset) -> CompositeAction {
    let means = train.mean_costs();
    train.space().unflatten(argmin(&means)).expect("index in range")
}

/// Actions the baseline takes on every instance of `test`.
pub fn baseline_actions(
    baseline: Baseline,
    train: &Dataset,
    test: &Dataset,
    policy: Option<&CompiledPolicy<'_>>,
    seed: u64,
) -> Result<Vec<CompositeAction>> {
    let space = test.space();
    let (j, k) = (space.num_experts(), space.row_len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let need = || policy.ok_or_else(|| invalid(format!("baseline {baseline} needs a learned policy")));
    let fixed = if baseline == Baseline::BestFixedPair {
        if train.space() != space {
            return Err(invalid("train and test action spaces differ"));
        }
        best_fixed_pair(train)
    } else {
        CompositeAction::new(0, 0)
    };
    (0..test.len())
        .map(|i| {
            Ok(match baseline {
                Baseline::BestFixedPair => fixed,
                Baseline::LearnedExpertRandomAdvice => {
                    let expert = need()?.decode(test.feature(i))?.expert;
                    CompositeAction::new(expert, rng.gen_range(0..k))
                }
                Baseline::RandomExpertLearnedAdvice => {
                    let expert = rng.gen_range(0..j);
                    CompositeAction::new(expert, need()?.learned_advice(test.feature(i), expert)?)
                }
                Baseline::RandomRouteNoAdvice => CompositeAction::new(rng.gen_range(0..j), 0),
                Baseline::RandomPair => CompositeAction::new(rng.gen_range(0..j), rng.gen_range(0..k)),
            })
        })
        .collect()
}

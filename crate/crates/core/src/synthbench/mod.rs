//! Two-region synthetic benchmark with certified conditional cost tables.

mod baselines;
mod benchmark;
mod evaluate;
mod spec;

pub use baselines::{baseline_actions, best_fixed_pair, Baseline};
pub use benchmark::{run_benchmark, BenchmarkConfig, BenchmarkReport, LabeledMap, MeanStd, RunRecord, SummaryRow};
pub use evaluate::{
    bayes_actions, bayes_decision_map, decision_map, decode_all, evaluate, evaluate_actions, policy_decision_map,
    DecisionMap, Metrics, RegionMetrics,
};
pub use spec::{
    bayes_reference, generate, region_of, BayesReference, RegionSpec, REGION_MINUS, REGION_NAMES, REGION_PLUS,
};

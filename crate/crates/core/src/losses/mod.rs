//! Surrogate losses and the analytic quantities derived from them.

mod comp_sum;
mod profile;
mod separated;
mod transfer;

pub use comp_sum::{augmented_surrogate, augmented_surrogate_into, comp_sum, ScoreVector, TauParameter};
pub use profile::{
    decode_router, fisher_counterexample, fisher_counterexample_with_delta, profile_objective, profiled_summary,
    profiled_summary_numeric, profiled_summary_verified, router_minimizer, Counterexample, ProfiledSummary,
};
pub use separated::{
    minimize_separated, phi0, phi1, separated_surrogate, separated_surrogate_costs, SeparatedScores,
};
pub use transfer::{transfer_gamma, transfer_gamma_tilde};

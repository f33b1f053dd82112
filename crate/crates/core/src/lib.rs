//! Learning to defer with advice acquisition.
//!
//! A policy routes each input to one of `J` experts and decides which of `K`
//! advice sources (if any) to reveal to it. Everything is expressed over
//! composite actions `(j, k)`: the executed pair is the only thing the loss
//! depends on.
//!
//! - [`action`], [`cost`], [`dataset`]: domain types and the true loss.
//! - [`bayes`]: the exact Bayes oracle and the mismatch decomposition.
//! - [`losses`]: the comp-sum family, the augmented surrogate, the separated
//!   surrogate with its profiled summaries, and transfer functions.
//! - [`scorer`]: MLP scorers, AdamW, training loops and decoders.
//! - [`synthbench`]: the two-region synthetic benchmark.

pub mod action;
pub mod bayes;
pub mod cost;
pub mod dataset;
pub mod error;
pub mod gradcheck;
pub mod losses;
pub mod optim;
pub mod scorer;
pub mod seed;
pub mod synthbench;

pub use action::{CompositeAction, CompositeActionSpace};
pub use cost::{CostComponents, CostTable};
pub use dataset::{Dataset, FeeSchedule};
pub use error::{Error, Result};

//! Profiled row summaries of the separated surrogate and the constructive
//! Fisher-inconsistency counterexample.
//!
//! Minimizing `u * phi0(t) + v * phi1(t)` over the query score `t` gives
//! `t* = log(u / v)` and
//! `F(u, v) = (u + v) log(u + v) - u log u - v log v`.
//! The router then sees one scalar `F` per expert row instead of the row
//! minimum, and that is where the separated surrogate goes wrong.

use serde::{Deserialize, Serialize};

use crate::bayes::bayes_policy;
use crate::cost::CostTable;
use crate::error::{invalid, Error, Result};
use crate::losses::separated::{minimize_separated, phi0, phi1, SeparatedScores};
use crate::optim::grid_golden_section;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfiledSummary {
    pub value: f64,
    pub minimizer: f64,
}

fn check_positive(name: &str, x: f64) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be positive, got {x}")))
    }
}

pub fn profile_objective(u: f64, v: f64, t: f64) -> f64 {
    u * phi0(t) + v * phi1(t)
}

fn xlogx(x: f64) -> f64 {
    x * x.ln()
}

pub fn profiled_summary(u: f64, v: f64) -> Result<ProfiledSummary> {
    check_positive("u", u)?;
    check_positive("v", v)?;
    Ok(ProfiledSummary {
        value: xlogx(u + v) - xlogx(u) - xlogx(v),
        minimizer: (u / v).ln(),
    })
}

/// `F(u, v)` by direct 1-D minimization, independent of the closed form.
pub fn profiled_summary_numeric(u: f64, v: f64) -> Result<ProfiledSummary> {
    check_positive("u", u)?;
    check_positive("v", v)?;
    // |t*| = |log(u/v)|; widen the window until it brackets the minimizer.
    let mut half = 8.0;
    loop {
        let (t, value) = grid_golden_section(|t| profile_objective(u, v, t), -half, half, 801, 1e-11);
        if t.abs() < 0.95 * half || half > 1e3 {
            return Ok(ProfiledSummary { value, minimizer: t });
        }
        half *= 4.0;
    }
}

/// Closed form, cross-checked against the numeric minimizer.
pub fn profiled_summary_verified(u: f64, v: f64, tol: f64) -> Result<ProfiledSummary> {
    let exact = profiled_summary(u, v)?;
    let numeric = profiled_summary_numeric(u, v)?;
    if (exact.value - numeric.value).abs() > tol {
        return Err(invalid(format!(
            "closed-form F({u}, {v}) = {} disagrees with numeric {}",
            exact.value, numeric.value
        )));
    }
    Ok(exact)
}

/// Minimizer of `a * phi0(t) + b * phi1(t)`: positive iff `a > b`, which
/// routes to the second expert.
pub fn router_minimizer(a: f64, b: f64) -> Result<f64> {
    check_positive("A", a)?;
    check_positive("B", b)?;
    Ok((a / b).ln())
}

/// Routed expert (0-based) for a binary router score.
pub fn decode_router(score: f64) -> usize {
    usize::from(score >= 0.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Counterexample {
    pub b: f64,
    pub epsilon: f64,
    pub bound: f64,
    pub delta: f64,
    /// Supremum of feasible `delta` located by bisection.
    pub delta_max: f64,
    pub table: CostTable,
    pub summary_expert1: f64,
    pub summary_expert2: f64,
    pub router_minimizer: f64,
    /// 0-based.
    pub bayes_expert: usize,
    /// 0-based expert chosen by the profiled router.
    pub surrogate_expert: usize,
}

impl Counterexample {
    pub fn disagrees(&self) -> bool {
        self.bayes_expert != self.surrogate_expert
    }

    /// Minimizes the full three-score surrogate on the table numerically.
    pub fn numeric_minimizer(&self) -> Result<SeparatedScores> {
        minimize_separated(&self.table)
    }
}

const BISECTION_TOL: f64 = 1e-9;

fn check_feasible(b: f64, epsilon: f64, bound: f64) -> Result<()> {
    if !(bound.is_finite() && b.is_finite() && epsilon.is_finite()) {
        return Err(Error::Infeasible("parameters must be finite".into()));
    }
    if !(b > 0.0 && b < bound) {
        return Err(Error::Infeasible(format!("need 0 < b < C, got b = {b}, C = {bound}")));
    }
    if !(epsilon > 0.0 && epsilon < bound - b) {
        return Err(Error::Infeasible(format!(
            "need 0 < epsilon < C - b = {}, got {epsilon}",
            bound - b
        )));
    }
    Ok(())
}

/// `g(delta) = F(b - delta, C) - F(b, b + eps)`: decreasing on `(0, b)`,
/// positive at `0+` and negative at `b-`.
fn gap(b: f64, epsilon: f64, bound: f64, delta: f64) -> f64 {
    let row1 = xlogx(b - delta + bound) - xlogx(b - delta) - xlogx(bound);
    let row2 = xlogx(2.0 * b + epsilon) - xlogx(b) - xlogx(b + epsilon);
    row1 - row2
}

fn largest_delta(b: f64, epsilon: f64, bound: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, b);
    while hi - lo > BISECTION_TOL {
        let mid = 0.5 * (lo + hi);
        if gap(b, epsilon, bound, mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Builds the table `((b - delta, C), (b, b + eps))` with `delta` set to half
/// the largest value for which the profiled summaries still invert the Bayes
/// comparison.
pub fn fisher_counterexample(b: f64, epsilon: f64, bound: f64) -> Result<Counterexample> {
    check_feasible(b, epsilon, bound)?;
    let delta_max = largest_delta(b, epsilon, bound);
    build(b, epsilon, bound, 0.5 * delta_max, delta_max)
}

/// As [`fisher_counterexample`] with a caller-chosen `delta`, which must lie
/// in the feasible interval.
pub fn fisher_counterexample_with_delta(b: f64, epsilon: f64, bound: f64, delta: f64) -> Result<Counterexample> {
    check_feasible(b, epsilon, bound)?;
    let delta_max = largest_delta(b, epsilon, bound);
    if !(delta > 0.0 && delta < b && gap(b, epsilon, bound, delta) > 0.0) {
        return Err(Error::Infeasible(format!(
            "delta = {delta} does not invert the profiled comparison (feasible up to {delta_max:.9})"
        )));
    }
    build(b, epsilon, bound, delta, delta_max)
}

fn build(b: f64, epsilon: f64, bound: f64, delta: f64, delta_max: f64) -> Result<Counterexample> {
    let table = CostTable::from_rows(&[[b - delta, bound], [b, b + epsilon]], bound)?;
    let f1 = profiled_summary(b - delta, bound)?.value;
    let f2 = profiled_summary(b, b + epsilon)?.value;
    let t = router_minimizer(f1, f2)?;
    Ok(Counterexample {
        b,
        epsilon,
        bound,
        delta,
        delta_max,
        bayes_expert: bayes_policy(&table).router,
        surrogate_expert: decode_router(t),
        table,
        summary_expert1: f1,
        summary_expert2: f2,
        router_minimizer: t,
    })
}

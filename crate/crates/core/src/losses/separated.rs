//! The binary router/query separated surrogate (two experts, one advice
//! source) with logistic envelopes, and its direct numeric minimizer.

use serde::{Deserialize, Serialize};

use crate::cost::CostTable;
use crate::error::{shape, Result};
use crate::optim::{minimize, MinimizeOptions};

/// `log(1 + e^{-u})`, the envelope of `1{u < 0}`.
pub fn phi0(u: f64) -> f64 {
    softplus(-u)
}

/// `log(1 + e^{u})`, the envelope of `1{u >= 0}`.
pub fn phi1(u: f64) -> f64 {
    softplus(u)
}

fn softplus(u: f64) -> f64 {
    u.max(0.0) + (-u.abs()).exp().ln_1p()
}

fn sigmoid(u: f64) -> f64 {
    if u >= 0.0 {
        1.0 / (1.0 + (-u).exp())
    } else {
        let e = u.exp();
        e / (1.0 + e)
    }
}

fn dphi0(u: f64) -> f64 {
    -sigmoid(-u)
}

fn dphi1(u: f64) -> f64 {
    sigmoid(u)
}

/// Router score and one query score per expert.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeparatedScores {
    pub router: f64,
    pub query: [f64; 2],
}

impl SeparatedScores {
    pub fn from_slice(s: &[f64]) -> Self {
        Self {
            router: s[0],
            query: [s[1], s[2]],
        }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.router, self.query[0], self.query[1]]
    }
}

fn check_binary(table: &CostTable) -> Result<()> {
    let sp = table.space();
    if sp.num_experts() != 2 || sp.num_advice() != 1 {
        return Err(shape(format!(
            "separated surrogate needs a 2 x 2 table, got {} x {}",
            sp.num_experts(),
            sp.row_len()
        )));
    }
    Ok(())
}

/// Value and gradient with respect to `(router, query[0], query[1])` for raw
/// costs in flat order `(c10, c11, c20, c21)`.
pub fn separated_surrogate_costs(s: SeparatedScores, c: &[f64; 4]) -> (f64, [f64; 3]) {
    let [r, q1, q2] = s.to_array();
    let row1 = c[0] * phi0(q1) + c[1] * phi1(q1);
    let row2 = c[2] * phi0(q2) + c[3] * phi1(q2);
    let (w1, w2) = (phi0(r), phi1(r));
    let value = w1 * row1 + w2 * row2;
    let grad = [
        dphi0(r) * row1 + dphi1(r) * row2,
        w1 * (c[0] * dphi0(q1) + c[1] * dphi1(q1)),
        w2 * (c[2] * dphi0(q2) + c[3] * dphi1(q2)),
    ];
    (value, grad)
}

pub fn separated_surrogate(s: SeparatedScores, table: &CostTable) -> Result<(f64, [f64; 3])> {
    check_binary(table)?;
    let c: [f64; 4] = table.as_slice().try_into().expect("2 x 2 table");
    Ok(separated_surrogate_costs(s, &c))
}

/// Minimizes the pointwise separated surrogate over all three scores
/// numerically, starting from the origin.
pub fn minimize_separated(table: &CostTable) -> Result<SeparatedScores> {
    check_binary(table)?;
    let c: [f64; 4] = table.as_slice().try_into().expect("2 x 2 table");
    let m = minimize(
        |x| {
            let (v, g) = separated_surrogate_costs(SeparatedScores::from_slice(x), &c);
            (v, g.to_vec())
        },
        &[0.0; 3],
        MinimizeOptions {
            max_iter: 5000,
            grad_tol: 1e-12,
        },
    );
    Ok(SeparatedScores::from_slice(&m.x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gradcheck::{central_diff, rel_err};

    #[test]
    fn zero_scores_all_ones() {
        let t = CostTable::from_rows(&[[1.0, 1.0], [1.0, 1.0]], 1.0).unwrap();
        let s = SeparatedScores { router: 0.0, query: [0.0, 0.0] };
        let (v, _) = separated_surrogate(s, &t).unwrap();
        let oracle = 4.0 * 2f64.ln().powi(2);
        assert!((v - oracle).abs() < 1e-14);
        assert!((v - 1.921_812_055_672_81).abs() < 1e-12);
    }

    #[test]
    fn very_negative_router_keeps_first_bracket_only() {
        let t = CostTable::from_rows(&[[0.3, 0.9], [0.6, 0.2]], 1.0).unwrap();
        let (q1, q2) = (0.4, -0.7);
        let s = SeparatedScores { router: -30.0, query: [q1, q2] };
        let (v, _) = separated_surrogate(s, &t).unwrap();
        let bracket1 = 0.3 * phi0(q1) + 0.9 * phi1(q1);
        // The router weight on expert 1 is phi0(-30) ~ 30, the weight on
        // expert 2 is phi1(-30) ~ 1e-13.
        assert!((v - phi0(-30.0) * bracket1).abs() < 1e-9);
        assert!((v / phi0(-30.0) - bracket1).abs() < 1e-9);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let t = CostTable::from_rows(&[[0.38, 1.08], [0.50, 0.51]], 1.08).unwrap();
        for x in [[0.3, -1.1, 0.7], [-2.0, 0.4, 1.5], [0.0, 0.0, 0.0]] {
            let s = SeparatedScores::from_slice(&x);
            let (_, g) = separated_surrogate(s, &t).unwrap();
            let fd = central_diff(
                |y| separated_surrogate(SeparatedScores::from_slice(y), &t).unwrap().0,
                &x,
                1e-5,
            );
            assert!(rel_err(&g, &fd) < 1e-7);
        }
    }

    #[test]
    fn rejects_non_binary_table() {
        let t = CostTable::from_rows(&[[0.1, 0.2, 0.3], [0.1, 0.2, 0.3]], 1.0).unwrap();
        let s = SeparatedScores { router: 0.0, query: [0.0, 0.0] };
        assert!(separated_surrogate(s, &t).is_err());
        assert!(minimize_separated(&t).is_err());
    }

    #[test]
    fn envelopes_are_stable() {
        assert!((phi0(0.0) - 2f64.ln()).abs() < 1e-15);
        assert!(phi1(800.0).is_finite() && (phi1(800.0) - 800.0).abs() < 1e-12);
        assert!(phi0(800.0) >= 0.0 && phi0(800.0) < 1e-300);
    }
}

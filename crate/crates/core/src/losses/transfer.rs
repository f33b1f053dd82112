//! Transfer functions bounding true excess risk by surrogate excess risk.

use crate::error::{invalid, Result};
use crate::losses::comp_sum::TauParameter;

/// Piecewise transfer of the comp-sum loss on an action set of size
/// `cardinality`:
/// `sqrt(2^tau (2 - tau) u)` on `[0, 1)`, `sqrt(2 n^(tau-1) u)` on `[1, 2)`,
/// `(tau - 1) n^(tau-1) u` from 2 on.
pub fn transfer_gamma(u: f64, tau: TauParameter, cardinality: usize) -> Result<f64> {
    if !(u.is_finite() && u >= 0.0) {
        return Err(invalid(format!("excess risk u must be >= 0, got {u}")));
    }
    if cardinality == 0 {
        return Err(invalid("action set must be non-empty"));
    }
    let t = tau.value();
    let n = cardinality as f64;
    Ok(if t < 1.0 {
        (2f64.powf(t) * (2.0 - t) * u).sqrt()
    } else if t < 2.0 {
        (2.0 * n.powf(t - 1.0) * u).sqrt()
    } else {
        (t - 1.0) * n.powf(t - 1.0) * u
    })
}

/// `m * Gamma(u / m)` where `m` is the expected weight mass.
pub fn transfer_gamma_tilde(u: f64, tau: TauParameter, cardinality: usize, weight_mass: f64) -> Result<f64> {
    if !(weight_mass.is_finite() && weight_mass > 0.0) {
        return Err(invalid(format!("weight mass must be positive, got {weight_mass}")));
    }
    Ok(weight_mass * transfer_gamma(u / weight_mass, tau, cardinality)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tau(t: f64) -> TauParameter {
        TauParameter::new(t).unwrap()
    }

    #[test]
    fn logistic_case() {
        assert!((transfer_gamma(0.5, tau(1.0), 4).unwrap() - 1.0).abs() < 1e-15);
        for u in [0.0, 0.1, 2.0, 7.5] {
            assert_eq!(transfer_gamma(u, tau(1.0), 9).unwrap(), (2.0 * u).sqrt());
        }
    }

    #[test]
    fn zero_excess_maps_to_zero() {
        for t in [0.0, 0.5, 1.0, 1.5, 2.0, 3.0] {
            assert_eq!(transfer_gamma(0.0, tau(t), 6).unwrap(), 0.0);
            assert_eq!(transfer_gamma_tilde(0.0, tau(t), 6, 2.0).unwrap(), 0.0);
        }
    }

    #[test]
    fn tau_zero_branch() {
        for u in [0.3, 1.0, 4.0] {
            let g = transfer_gamma(u, tau(0.0), 4).unwrap();
            assert!((g - (2.0 * u).sqrt()).abs() < 1e-15);
        }
    }

    #[test]
    fn tilde_scaling() {
        let g = transfer_gamma(0.7, tau(2.5), 4).unwrap();
        assert_eq!(transfer_gamma_tilde(0.7, tau(2.5), 4, 1.0).unwrap(), g);
        let m = 1.7;
        let u = 0.4;
        let gt = transfer_gamma_tilde(u, tau(1.0), 4, m).unwrap();
        assert!((gt - (2.0 * u * m).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(transfer_gamma(-1.0, tau(1.0), 4).is_err());
        assert!(transfer_gamma_tilde(1.0, tau(1.0), 4, 0.0).is_err());
    }
}

//! Closed-form tail bounds for the geometric-mean estimator with alpha = 2.

use std::f64::consts::PI;

use statrs::function::gamma::gamma;

use super::projection::MIN_ELL;
use crate::error::{Error, Result};

pub const EULER_GAMMA: f64 = 0.577215665;
pub const DEFAULT_ELL0: usize = 8;
const ALPHA: f64 = 2.0;
const ELL_SCAN_CAP: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailBoundParams {
    pub epsilon: f64,
    pub ell: usize,
    pub ell0: usize,
}

impl TailBoundParams {
    pub fn new(epsilon: f64, ell: usize, ell0: usize) -> Result<Self> {
        let p = Self { epsilon, ell, ell0 };
        p.validate()?;
        Ok(p)
    }

    pub fn with_default_ell0(epsilon: f64, ell: usize) -> Result<Self> {
        Self::new(epsilon, ell, DEFAULT_ELL0)
    }

    fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::domain(format!("epsilon must lie in (0, 1), got {}", self.epsilon)));
        }
        if self.ell0 < 3 {
            return Err(Error::domain(format!("ell0 must be at least 3, got {}", self.ell0)));
        }
        if self.ell <= self.ell0 {
            return Err(Error::Precondition(format!("ell = {} must exceed ell0 = {}", self.ell, self.ell0)));
        }
        Ok(())
    }
}

/// `epsilon^2 / G_R`: the per-coordinate exponent of the right tail.
pub fn right_exponent(epsilon: f64) -> f64 {
    let c1 = 2.0 / PI * ((1.0 + epsilon).ln() / ((2.0 + ALPHA * ALPHA) * PI / 6.0)).atan();
    c1 * (1.0 + epsilon).ln()
        - c1 * EULER_GAMMA * (ALPHA - 1.0)
        - (2.0 / PI * gamma(ALPHA * c1) * gamma(1.0 - c1) * (PI * ALPHA * c1 / 2.0).sin()).ln()
}

/// `epsilon^2 / G_L`: the per-coordinate exponent of the left tail.
pub fn left_exponent(epsilon: f64, ell0: usize) -> f64 {
    let c2 = 12.0 / (PI * PI) * epsilon / (2.0 + ALPHA * ALPHA);
    let l0 = ell0 as f64;
    -c2 * (1.0 - epsilon).ln()
        - (-2.0 / PI * gamma(-ALPHA * c2) * gamma(1.0 + c2) * (PI * ALPHA * c2 / 2.0).sin()).ln()
        - l0 * c2 * (2.0 / PI * gamma(ALPHA / l0) * gamma(1.0 - 1.0 / l0) * (PI / 2.0 * ALPHA / l0).sin()).ln()
}

/// Bound on `P(estimate > (1 + eps) * truth)`, capped at 1.
pub fn right_tail_bound(params: &TailBoundParams) -> f64 {
    (-(params.ell as f64) * right_exponent(params.epsilon)).exp().min(1.0)
}

/// Bound on `P(estimate < (1 - eps) * truth)`, capped at 1. For small
/// `epsilon` and small `ell0` the exponent is negative and the bound is vacuous.
pub fn left_tail_bound(params: &TailBoundParams) -> Result<f64> {
    params.validate()?;
    Ok((-(params.ell as f64) * left_exponent(params.epsilon, params.ell0)).exp().min(1.0))
}

/// Union bound on leaving `[(1 - eps), (1 + eps)] * truth`.
pub fn two_sided_bound(params: &TailBoundParams) -> Result<f64> {
    Ok(right_tail_bound(params) + left_tail_bound(params)?)
}

/// Smallest encoding size whose two-sided bound is at most `delta`.
///
/// Scans upward from the minimum supported size. At each candidate `ell` the
/// left bound is evaluated with `ell0 = ell - 1`, the tightest admissible choice
/// (the left exponent grows with `ell0`). Returns `None` if nothing up to 10^6 works.
pub fn required_ell(epsilon: f64, delta: f64) -> Result<Option<usize>> {
    if !(epsilon > 0.0 && epsilon < 1.0) || !(delta > 0.0 && delta < 1.0) {
        return Err(Error::domain("epsilon and delta must lie in (0, 1)"));
    }
    let right = right_exponent(epsilon);
    let start = MIN_ELL.max(DEFAULT_ELL0 + 1);
    for ell in start..=ELL_SCAN_CAP {
        let r = (-(ell as f64) * right).exp().min(1.0);
        let l = (-(ell as f64) * left_exponent(epsilon, ell - 1)).exp().min(1.0);
        if r + l <= delta {
            return Ok(Some(ell));
        }
    }
    Ok(None)
}

/// Two-sided bound as evaluated by [`required_ell`] (with `ell0 = ell - 1`).
pub fn best_two_sided_bound(epsilon: f64, ell: usize) -> Result<f64> {
    two_sided_bound(&TailBoundParams::new(epsilon, ell, ell - 1)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bounds_are_probabilities() {
        for eps in [0.05, 0.1, 0.3, 0.5, 0.9] {
            for ell in [9usize, 50, 500] {
                let p = TailBoundParams::with_default_ell0(eps, ell).unwrap();
                let r = right_tail_bound(&p);
                let l = left_tail_bound(&p).unwrap();
                assert!(r > 0.0 && r <= 1.0);
                assert!(l > 0.0 && l <= 1.0);
            }
        }
    }

    #[test]
    fn reference_values() {
        // Independent evaluation of the closed forms (scipy.special.gamma).
        assert!((right_exponent(0.3) - 0.007363347045846687).abs() < 1e-9);
        assert!((left_exponent(0.5, 8) - 0.013991371881245971).abs() < 1e-9);
        assert!((left_exponent(0.3, 50) - 0.008939).abs() < 1e-6);
        let p = TailBoundParams::with_default_ell0(0.3, 50).unwrap();
        assert!((right_tail_bound(&p) - 0.6920013639832604).abs() < 1e-9);
        // negative exponent at eps = 0.3, ell0 = 8: vacuous
        assert_eq!(left_tail_bound(&p).unwrap(), 1.0);
    }

    #[test]
    fn monotone_in_ell_and_epsilon() {
        let mut prev = f64::INFINITY;
        for ell in [10usize, 20, 50, 100, 400] {
            let b = right_tail_bound(&TailBoundParams::with_default_ell0(0.3, ell).unwrap());
            assert!(b < prev);
            prev = b;
        }
        let mut prev = f64::INFINITY;
        for ell in [10usize, 20, 50, 100, 400] {
            let b = left_tail_bound(&TailBoundParams::with_default_ell0(0.6, ell).unwrap()).unwrap();
            assert!(b <= prev);
            prev = b;
        }
        let mut prev = f64::INFINITY;
        for k in 1..=10 {
            let eps = 0.05 * k as f64;
            let b = right_tail_bound(&TailBoundParams::with_default_ell0(eps, 50).unwrap());
            assert!(b < prev, "eps {eps}");
            prev = b;
        }
    }

    #[test]
    fn left_bound_requires_ell_above_ell0() {
        assert!(matches!(TailBoundParams::new(0.3, 8, 8), Err(Error::Precondition(_))));
        assert!(TailBoundParams::new(0.3, 9, 2).is_err());
        assert!(TailBoundParams::new(1.0, 50, 8).is_err());
    }

    #[test]
    fn required_ell_is_minimal_and_scales() {
        let ell = required_ell(0.3, 0.05).unwrap().unwrap();
        assert!(best_two_sided_bound(0.3, ell).unwrap() <= 0.05);
        assert!(best_two_sided_bound(0.3, ell - 1).unwrap() > 0.05);

        let smaller_delta = required_ell(0.3, 0.01).unwrap().unwrap();
        assert!(smaller_delta > ell);

        let half = required_ell(0.15, 0.05).unwrap().unwrap();
        let ratio = half as f64 / ell as f64;
        assert!((ratio / 4.0 - 1.0).abs() < 0.2, "ratio {ratio}");
    }
}

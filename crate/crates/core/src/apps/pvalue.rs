//! Chi-square p-values for federated estimates.

use nalgebra::{DMatrix, SymmetricEigen};
use statrs::function::gamma::{digamma, gamma_ur};

use crate::error::{Error, Result};
use crate::registry::Registry;
use crate::sketch::gm_log_correction;

/// Upper tail `Q(dof/2, statistic/2)` of the chi-square distribution.
pub fn chi2_sf(statistic: f64, dof: usize) -> f64 {
    if statistic <= 0.0 {
        return 1.0;
    }
    gamma_ur(dof as f64 / 2.0, statistic / 2.0).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PValue {
    pub statistic: f64,
    pub dof: usize,
    pub p: f64,
}

/// Turns an estimate from a sketch of size `ell` into a p-value.
pub trait PValueMethod: Send + Sync {
    fn name(&self) -> &'static str;

    fn p_value(&self, estimate: f64, dof: usize, ell: usize) -> PValue;
}

/// Treats the estimate as if it were the exact statistic.
#[derive(Debug, Clone, Copy, Default)]
pub struct Chi2Sf;

impl PValueMethod for Chi2Sf {
    fn name(&self) -> &'static str {
        "chi2"
    }

    fn p_value(&self, estimate: f64, dof: usize, _ell: usize) -> PValue {
        PValue { statistic: estimate, dof, p: chi2_sf(estimate, dof) }
    }
}

/// Accounts for the sketch noise. The estimate is `s * R` with `s` the exact
/// statistic and `R` independent of it; `ln R` is an average of `ell` i.i.d.
/// terms `2 ln|Z|`, `Z ~ N(0, 2)`, shifted by the bias correction, so by the
/// central limit theorem it is close to normal with variance `pi^2 / (2 ell)`.
/// The p-value is `E_R[Q(dof/2, estimate / (2R))]`, integrated by
/// Gauss-Hermite quadrature.
#[derive(Debug, Clone)]
pub struct CalibratedSf {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl Default for CalibratedSf {
    fn default() -> Self {
        Self::new(48)
    }
}

impl CalibratedSf {
    pub fn new(points: usize) -> Self {
        let (nodes, weights) = gauss_hermite(points);
        Self { nodes, weights }
    }

    /// Mean and standard deviation of `ln R` at encoding size `ell`.
    pub fn log_ratio_moments(ell: usize) -> (f64, f64) {
        // E ln|Z| for Z ~ N(0, 2): (ln 2 + psi(1/2) + ln 2) / 2
        let e_ln_abs = (2.0 * std::f64::consts::LN_2 + digamma(0.5)) / 2.0;
        let mean = 2.0 * e_ln_abs - gm_log_correction(ell);
        let sd = (std::f64::consts::PI.powi(2) / (2.0 * ell as f64)).sqrt();
        (mean, sd)
    }
}

impl PValueMethod for CalibratedSf {
    fn name(&self) -> &'static str {
        "calibrated"
    }

    fn p_value(&self, estimate: f64, dof: usize, ell: usize) -> PValue {
        let (mu, sd) = Self::log_ratio_moments(ell);
        let p = self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * chi2_sf(estimate * (-(mu + std::f64::consts::SQRT_2 * sd * x)).exp(), dof))
            .sum::<f64>()
            / std::f64::consts::PI.sqrt();
        PValue { statistic: estimate, dof, p: p.clamp(0.0, 1.0) }
    }
}

/// Physicists' Gauss-Hermite nodes and weights (weight `exp(-x^2)`) by the
/// Golub-Welsch eigenvalue method.
pub fn gauss_hermite(points: usize) -> (Vec<f64>, Vec<f64>) {
    let j = DMatrix::from_fn(points, points, |a, b| if a + 1 == b || b + 1 == a { (a.max(b) as f64 / 2.0).sqrt() } else { 0.0 });
    let eig = SymmetricEigen::new(j);
    let sqrt_pi = std::f64::consts::PI.sqrt();
    let mut pairs: Vec<(f64, f64)> = (0..points).map(|k| (eig.eigenvalues[k], sqrt_pi * eig.eigenvectors[(0, k)].powi(2))).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

pub fn pvalue_methods() -> Registry<dyn PValueMethod> {
    let mut reg: Registry<dyn PValueMethod> = Registry::new("p-value method");
    reg.register("chi2", Box::new(Chi2Sf));
    reg.register("calibrated", Box::new(CalibratedSf::default()));
    reg
}

/// Looks up a method by name, returning an owned handle.
pub fn pvalue_method(name: &str) -> Result<Box<dyn PValueMethod>> {
    match name {
        "chi2" => Ok(Box::new(Chi2Sf)),
        "calibrated" => Ok(Box::new(CalibratedSf::default())),
        other => Err(Error::Unknown { kind: "p-value method", name: other.into(), available: pvalue_methods().names().join(", ") }),
    }
}

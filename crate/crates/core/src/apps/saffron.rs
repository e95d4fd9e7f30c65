//! SAFFRON online false discovery rate control.

use crate::error::{Error, Result};

const GAMMA_EXPONENT: f64 = 1.6;
pub const GAMMA_TERMS: usize = 10_001;

/// `gamma_j = (j + 1)^-1.6 / sum_{i=0}^{10000} (i + 1)^-1.6` for
/// `j = 0..len`. Entry `j` is the algorithm's `gamma_{j+1}`.
pub fn gamma_sequence(len: usize) -> Result<Vec<f64>> {
    if len > GAMMA_TERMS {
        return Err(Error::domain(format!("gamma sequence is truncated at {GAMMA_TERMS} terms, asked for {len}")));
    }
    let raw = |j: usize| ((j + 1) as f64).powf(-GAMMA_EXPONENT);
    // Sum smallest terms first.
    let norm: f64 = (0..GAMMA_TERMS).rev().map(raw).sum();
    Ok((0..len).map(|j| raw(j) / norm).collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaffronParams {
    /// Target FDR level.
    pub alpha: f64,
    /// Initial wealth.
    pub w0: f64,
    /// Candidacy threshold, constant over time.
    pub lambda: f64,
}

impl Default for SaffronParams {
    fn default() -> Self {
        Self { alpha: 0.05, w0: 0.0125, lambda: 0.5 }
    }
}

/// Bookkeeping for the SAFFRON procedure. Times are one-based.
#[derive(Debug, Clone)]
pub struct SaffronState {
    params: SaffronParams,
    gamma: Vec<f64>,
    t: usize,
    /// `candidates_before[t]` = number of candidates among `p_1..p_t`.
    candidates_before: Vec<usize>,
    /// Rejection times `tau_1 < tau_2 < ...`.
    rejections: Vec<usize>,
    last_alpha: f64,
}

impl SaffronState {
    pub fn new(params: SaffronParams) -> Result<Self> {
        if !(params.alpha > 0.0 && params.alpha < 1.0) {
            return Err(Error::config("alpha must lie in (0, 1)"));
        }
        if !(params.w0 > 0.0 && params.w0 < params.alpha) {
            return Err(Error::config("initial wealth must lie in (0, alpha)"));
        }
        if !(params.lambda > 0.0 && params.lambda < 1.0) {
            return Err(Error::config("lambda must lie in (0, 1)"));
        }
        Ok(Self { params, gamma: gamma_sequence(GAMMA_TERMS)?, t: 0, candidates_before: vec![0], rejections: Vec::new(), last_alpha: 0.0 })
    }

    pub fn params(&self) -> SaffronParams {
        self.params
    }

    /// Number of p-values consumed so far.
    pub fn t(&self) -> usize {
        self.t
    }

    pub fn rejections(&self) -> &[usize] {
        &self.rejections
    }

    /// The threshold used for the most recent p-value.
    pub fn last_alpha(&self) -> f64 {
        self.last_alpha
    }

    pub fn candidates(&self) -> usize {
        *self.candidates_before.last().unwrap()
    }

    /// One-based `gamma_idx`; zero past the truncation.
    fn gamma(&self, idx: usize) -> f64 {
        debug_assert!(idx >= 1);
        self.gamma.get(idx - 1).copied().unwrap_or(0.0)
    }

    /// `C_{j+}` at time `t`: candidates among `p_{tau_j + 1} .. p_{t - 1}`.
    fn candidates_after(&self, tau: usize, t: usize) -> usize {
        self.candidates_before[t - 1] - self.candidates_before[tau]
    }

    /// The test level for time `t = self.t + 1`, before seeing `p_t`.
    pub fn next_alpha(&self) -> f64 {
        let t = self.t + 1;
        let SaffronParams { alpha, w0, lambda } = self.params;
        if t == 1 {
            return (1.0 - lambda) * self.gamma(1) * w0;
        }
        let mut wealth = w0 * self.gamma(t - self.candidates_after(0, t));
        for (j, &tau) in self.rejections.iter().enumerate() {
            let weight = if j == 0 { alpha - w0 } else { alpha };
            wealth += weight * self.gamma(t - tau - self.candidates_after(tau, t));
        }
        (1.0 - lambda) * wealth
    }
}

/// Consumes `p_t` and returns the rejection indicator `R_t`.
pub fn saffron_step(state: &mut SaffronState, p: f64) -> Result<bool> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::domain(format!("p-value {p} outside [0, 1]")));
    }
    let alpha_t = state.next_alpha();
    state.t += 1;
    let candidate = p < state.params.lambda;
    let before = state.candidates();
    state.candidates_before.push(before + candidate as usize);
    state.last_alpha = alpha_t;
    let reject = p <= alpha_t;
    if reject {
        state.rejections.push(state.t);
    }
    Ok(reject)
}

//! Online FDR control over a stream of federated chi-square tests on
//! discretised bivariate Gaussian data.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use super::pvalue::{pvalue_method, PValueMethod};
use super::saffron::{saffron_step, SaffronParams, SaffronState};
use crate::contingency::{split_across_clients, ContingencyTable};
use crate::error::Result;
use crate::protocol::{fed_chi2, ProtocolConfig};
use crate::seed::derive;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FdrParams {
    pub steps: usize,
    pub per_step: usize,
    /// Probability that a hypothesis is a true null.
    pub null_fraction: f64,
    /// Bins per axis.
    pub bins: usize,
    /// Observations per hypothesis.
    pub samples: usize,
    /// Registered p-value method name.
    pub pvalue: String,
}

impl Default for FdrParams {
    fn default() -> Self {
        Self { steps: 100, per_step: 100, null_fraction: 0.5, bins: 20, samples: 2000, pvalue: "calibrated".into() }
    }
}

fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

/// Equal-probability bin of `value` under `N(0, sd^2)`.
fn quantile_bin(value: f64, sd: f64, bins: usize) -> usize {
    ((normal_cdf(value / sd) * bins as f64) as usize).min(bins - 1)
}

/// One hypothesis: `(x, y) = A z` with `A` uniform on `[0, 1]^{2x2}` when
/// correlated, or a diagonal `A` with uniform entries under the null. Each
/// axis is cut at the quantiles of its marginal distribution.
pub fn gaussian_table(is_null: bool, bins: usize, samples: usize, seed: u64) -> Result<ContingencyTable> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a: [f64; 4] = if is_null {
        [rng.random::<f64>().sqrt(), 0.0, 0.0, rng.random::<f64>().sqrt()]
    } else {
        [rng.random(), rng.random(), rng.random(), rng.random()]
    };
    let sd_x = (a[0] * a[0] + a[1] * a[1]).sqrt();
    let sd_y = (a[2] * a[2] + a[3] * a[3]).sqrt();
    let mut t = ContingencyTable::zeros(bins, bins)?;
    for _ in 0..samples {
        let z1: f64 = StandardNormal.sample(&mut rng);
        let z2: f64 = StandardNormal.sample(&mut rng);
        let (x, y) = (a[0] * z1 + a[1] * z2, a[2] * z1 + a[3] * z2);
        t.add_to(quantile_bin(x, sd_x, bins), quantile_bin(y, sd_y, bins), 1);
    }
    Ok(t)
}

/// Cumulative counts after one step.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FdrStepRow {
    pub seed: u64,
    pub ell: usize,
    pub step: usize,
    pub rejections: usize,
    pub false_rejections: usize,
    pub fdr: f64,
}

#[derive(Debug, Clone)]
pub struct FdrRun {
    pub rows: Vec<FdrStepRow>,
    /// FDR of the final rejection set.
    pub fdr: f64,
    pub rejections: usize,
    pub false_rejections: usize,
}

/// Federated estimates for a stream of hypotheses, in arrival order.
#[derive(Debug, Clone)]
pub struct HypothesisStream {
    pub seed: u64,
    pub ell: usize,
    pub dof: usize,
    pub per_step: usize,
    pub estimates: Vec<f64>,
    pub nulls: Vec<bool>,
}

pub fn hypothesis_stream(params: &FdrParams, config: &ProtocolConfig, seed: u64) -> Result<HypothesisStream> {
    let cfg = ProtocolConfig { m_x: params.bins, m_y: params.bins, ..config.clone() };
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive(seed, &[0]));
    let total = params.steps * params.per_step;
    let nulls: Vec<bool> = (0..total).map(|_| rng.random::<f64>() < params.null_fraction).collect();
    let estimates = nulls
        .par_iter()
        .enumerate()
        .map(|(h, &is_null)| {
            let id = h as u64;
            let table = gaussian_table(is_null, params.bins, params.samples, derive(seed, &[1, id]))?;
            let clients = split_across_clients(&table, cfg.n, derive(seed, &[2, id]));
            let mut c = cfg.clone();
            c.seeds.projection = derive(seed, &[3, id]);
            c.seeds.graph = derive(seed, &[4, id]);
            c.seeds.key_agreement = derive(seed, &[5, id]);
            Ok(fed_chi2(&clients, &c)?.estimate)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(HypothesisStream { seed, ell: cfg.ell, dof: cfg.dof(), per_step: params.per_step.max(1), estimates, nulls })
}

/// Feeds every p-value, in arrival order, to one SAFFRON stream.
pub fn saffron_over(stream: &HypothesisStream, method: &dyn PValueMethod) -> Result<FdrRun> {
    let mut state = SaffronState::new(SaffronParams::default())?;
    let (mut rejections, mut false_rejections) = (0usize, 0usize);
    let mut rows = Vec::new();
    for (h, (&estimate, &is_null)) in stream.estimates.iter().zip(&stream.nulls).enumerate() {
        let p = method.p_value(estimate, stream.dof, stream.ell).p;
        if saffron_step(&mut state, p)? {
            rejections += 1;
            false_rejections += is_null as usize;
        }
        if (h + 1) % stream.per_step == 0 {
            rows.push(FdrStepRow {
                seed: stream.seed,
                ell: stream.ell,
                step: (h + 1) / stream.per_step,
                rejections,
                false_rejections,
                fdr: false_rejections as f64 / rejections.max(1) as f64,
            });
        }
    }
    let fdr = false_rejections as f64 / rejections.max(1) as f64;
    Ok(FdrRun { rows, fdr, rejections, false_rejections })
}

pub fn fdr_run(params: &FdrParams, config: &ProtocolConfig, seed: u64) -> Result<FdrRun> {
    let method = pvalue_method(&params.pvalue)?;
    saffron_over(&hypothesis_stream(params, config, seed)?, method.as_ref())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contingency::chi2_statistic;

    #[test]
    fn null_tables_look_independent_and_correlated_ones_do_not() {
        let null: Vec<f64> = (0..20).map(|s| chi2_statistic(&gaussian_table(true, 20, 2000, s).unwrap()).unwrap()).collect();
        let mean = null.iter().sum::<f64>() / 20.0;
        assert!((mean - 361.0).abs() < 40.0, "{mean}");
        let strong = (0..20).filter(|&s| chi2_statistic(&gaussian_table(false, 20, 2000, 100 + s).unwrap()).unwrap() > 500.0).count();
        assert!(strong >= 15);
    }

    #[test]
    fn quantile_bins_are_balanced() {
        let t = gaussian_table(true, 10, 20_000, 5).unwrap();
        for r in t.marginals().row_sums {
            assert!((r - 2000).abs() < 250, "{r}");
        }
    }

    #[test]
    fn small_stream_runs() {
        let params = FdrParams { steps: 3, per_step: 10, ..FdrParams::default() };
        let cfg = ProtocolConfig { key_agreement: "test".into(), ell: 50, broadcast_by_seed: true, ..ProtocolConfig::default() };
        let run = fdr_run(&params, &cfg, 1).unwrap();
        assert_eq!(run.rows.len(), 3);
        assert!(run.false_rejections <= run.rejections);
        let again = fdr_run(&params, &cfg, 1).unwrap();
        assert_eq!(run.rows, again.rows);
    }
}

//! The acceptance suites, one per criterion, selectable by id.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::spec::{ExperimentSpec, Grid};
use super::sweeps::{accuracy_errors, accuracy_sweep, cost_sweep, rank_check};
use crate::apps::caesar::{caesar_success_rate, CaesarParams};
use crate::apps::fdr::{hypothesis_stream, saffron_over, FdrParams};
use crate::apps::pvalue::pvalue_method;
use crate::contingency::{build_u_vector, chi2_statistic, split_across_clients, synth_dataset, ContingencyTable, SynthKind, UVector};
use crate::error::{Error, Result};
use crate::protocol::ProtocolConfig;
use crate::registry::Registry;
use crate::secagg::{init_secure_agg, key_agreement, AggregationSetup, ClientOps, FieldVector, MessageBus, SecureAggregator};
use crate::seed::derive;
use crate::sketch::{decode_gm, encode, left_tail_bound, right_tail_bound, sample_projection, TailBoundParams};
use crate::stats::{ks_two_sample, mean, std_error};

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteOutcome {
    pub passed: bool,
    pub detail: String,
}

impl SuiteOutcome {
    fn new(passed: bool, detail: impl Into<String>) -> Self {
        Self { passed, detail: detail.into() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub criterion: usize,
    pub id: &'static str,
    /// The check passed and finished within its time limit.
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
    pub limit: Duration,
}

impl std::fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} criterion {:>2} {:<20} {:>7.1}s / {:>4}s  {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.criterion,
            self.id,
            self.elapsed.as_secs_f64(),
            self.limit.as_secs(),
            self.detail
        )
    }
}

pub trait AcceptanceSuite: Send + Sync {
    fn id(&self) -> &'static str;
    fn criterion(&self) -> usize;
    fn limit(&self) -> Duration;
    fn check(&self) -> Result<SuiteOutcome>;
}

/// Runs one suite, or every suite in criterion order when `id` is `"all"`.
/// An error inside a suite is reported as a failure of that suite.
pub fn run_acceptance(id: &str) -> Result<Vec<SuiteReport>> {
    let registry = acceptance_suites();
    let mut selected: Vec<&dyn AcceptanceSuite> = if id == "all" { registry.iter().map(|(_, s)| s).collect() } else { vec![registry.get(id)?] };
    selected.sort_by_key(|s| s.criterion());
    Ok(selected
        .into_iter()
        .map(|suite| {
            let start = Instant::now();
            let outcome = suite.check().unwrap_or_else(|e| SuiteOutcome::new(false, format!("error: {e}")));
            let elapsed = start.elapsed();
            let limit = suite.limit();
            let mut detail = outcome.detail;
            if elapsed > limit {
                detail.push_str("; over time limit");
            }
            SuiteReport { criterion: suite.criterion(), id: suite.id(), passed: outcome.passed && elapsed <= limit, detail, elapsed, limit }
        })
        .collect())
}

pub fn acceptance_suites() -> Registry<dyn AcceptanceSuite> {
    let mut r: Registry<dyn AcceptanceSuite> = Registry::new("acceptance suite");
    let all: Vec<Box<dyn AcceptanceSuite>> = vec![
        Box::new(RecastIdentity),
        Box::new(MaskCancel),
        Box::new(Unbiasedness),
        Box::new(Accuracy),
        Box::new(ClientIndependence),
        Box::new(Hiding),
        Box::new(TailBound),
        Box::new(Caesar),
        Box::new(SaffronFdr),
        Box::new(Cost),
    ];
    for s in all {
        r.register(s.id(), s);
    }
    r
}

/// Monte Carlo runs use the cheap key agreement; masking itself is the same
/// code path, and x25519 is exercised by the mask-cancel suite.
fn mc_config() -> ProtocolConfig {
    ProtocolConfig { key_agreement: "test".into(), ..ProtocolConfig::default() }
}

fn random_table(rng: &mut ChaCha8Rng) -> Result<ContingencyTable> {
    loop {
        let (rows, cols) = (rng.random_range(2..=20), rng.random_range(2..=20));
        let counts = (0..rows * cols).map(|_| rng.random_range(0..=100)).collect();
        let t = ContingencyTable::from_counts(rows, cols, counts)?;
        if t.marginals().require_positive().is_ok() {
            return Ok(t);
        }
    }
}

struct RecastIdentity;

impl AcceptanceSuite for RecastIdentity {
    fn id(&self) -> &'static str {
        "recast-identity"
    }
    fn criterion(&self) -> usize {
        1
    }
    fn limit(&self) -> Duration {
        Duration::from_secs(5)
    }
    fn check(&self) -> Result<SuiteOutcome> {
        let mut rng = ChaCha8Rng::seed_from_u64(101);
        let mut worst = 0.0f64;
        for t in 0..100u64 {
            let table = random_table(&mut rng)?;
            let oracle = chi2_statistic(&table)?;
            let marginals = table.marginals();
            for n in [1, 5, 10] {
                let clients = split_across_clients(&table, n, derive(t, &[n as u64]));
                let us = clients.iter().map(|c| build_u_vector(c, &marginals, n)).collect::<Result<Vec<_>>>()?;
                let s = UVector::sum(&us)?.squared_norm();
                worst = worst.max((s - oracle).abs() / oracle);
            }
        }
        Ok(SuiteOutcome::new(worst <= 1e-9, format!("worst relative deviation {worst:.2e} over 300 splits (tolerance 1e-9)")))
    }
}

struct MaskCancel;

impl AcceptanceSuite for MaskCancel {
    fn id(&self) -> &'static str {
        "mask-cancel"
    }
    fn criterion(&self) -> usize {
        2
    }
    fn limit(&self) -> Duration {
        Duration::from_secs(10)
    }
    fn check(&self) -> Result<SuiteOutcome> {
        let ka = key_agreement("x25519", 0)?;
        let mut mismatches = 0;
        let mut unmasked = 0;
        for n in [2usize, 3, 10, 100] {
            let mut bus = MessageBus::new();
            bus.capture();
            let mut ops = vec![ClientOps::default(); n];
            let setup = AggregationSetup::establish(init_secure_agg(n, 7)?, ka.as_ref(), derive(8, &[n as u64]), &mut bus, &mut ops)?;
            let mut rng = ChaCha8Rng::seed_from_u64(derive(9, &[n as u64]));
            for round in 1..=50u64 {
                let len = rng.random_range(1..=64);
                let inputs: Vec<FieldVector> = (0..n).map(|_| FieldVector::from_residues((0..len).map(|_| rng.random()).collect())).collect();
                let before = bus.captured().len();
                let sum = SecureAggregator.aggregate_field(&setup, round, &inputs, &mut bus, &mut ops)?;
                mismatches += (sum != FieldVector::sum(len, &inputs)) as usize;
                let uploads = &bus.captured()[before..];
                unmasked += uploads.iter().zip(&inputs).filter(|(e, x)| e.payload == x.to_bytes()).count();
            }
        }
        Ok(SuiteOutcome::new(
            mismatches == 0 && unmasked == 0,
            format!("{mismatches} of 200 rounds differ from the plain field sum; {unmasked} uploads equal their unmasked input"),
        ))
    }
}

struct Unbiasedness;

impl AcceptanceSuite for Unbiasedness {
    fn id(&self) -> &'static str {
        "unbiasedness"
    }
    fn criterion(&self) -> usize {
        3
    }
    fn limit(&self) -> Duration {
        Duration::from_secs(30)
    }
    fn check(&self) -> Result<SuiteOutcome> {
        let mut rng = ChaCha8Rng::seed_from_u64(303);
        let raw: Vec<f64> = (0..100).map(|_| rng.random::<f64>() - 0.5).collect();
        let norm = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
        let u = UVector::new(raw.iter().map(|x| x * 10.0 / norm).collect())?;
        let estimates = (0..10_000u64)
            .into_par_iter()
            .map(|t| Ok(decode_gm(&encode(&sample_projection(50, u.len(), derive(304, &[t]))?, &u)?)))
            .collect::<Result<Vec<_>>>()?;
        let m = mean(&estimates);
        let dev = (m - 100.0).abs() / 100.0;
        Ok(SuiteOutcome::new(dev <= 0.02, format!("mean {m:.3} (|u|^2 = {:.3}), deviation {:.2}% (standard error {:.3})", u.squared_norm(), dev * 100.0, std_error(&estimates))))
    }
}

struct Accuracy;

/// Runs per grid point. Ten (the sweep default) leaves the 3-point
/// monotonicity check at the mercy of sampling noise.
const ACCURACY_RUNS: usize = 100;

impl AcceptanceSuite for Accuracy {
    fn id(&self) -> &'static str {
        "accuracy"
    }
    fn criterion(&self) -> usize {
        4
    }
    fn limit(&self) -> Duration {
        Duration::from_secs(300)
    }
    fn check(&self) -> Result<SuiteOutcome> {
        let spec = ExperimentSpec {
            seed: 404,
            runs: ACCURACY_RUNS,
            protocol: mc_config(),
            grid: Grid { n: vec![10, 100], ell: vec![10, 50, 200], datasets: SynthKind::ALL.to_vec(), ..Grid::default() },
            ..ExperimentSpec::default()
        };
        let rows = accuracy_sweep(&spec)?;
        let at50: Vec<f64> = rows.iter().filter(|r| r.ell == 50).map(|r| r.mean_rel_error).collect();
        let pooled = mean(&at50);
        let mut violations = Vec::new();
        for &d in &spec.grid.datasets {
            for &n in &spec.grid.n {
                let curve: Vec<f64> = spec.grid.ell.iter().map(|&l| rows.iter().find(|r| r.dataset == d && r.n == n && r.ell == l).unwrap().mean_rel_error).collect();
                if curve.windows(2).any(|w| w[1] >= w[0]) {
                    violations.push(format!("{}/n={n}: {curve:.3?}", d.name()));
                }
            }
        }
        let (lo, hi) = at50.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
        let passed = (0.1..=0.3).contains(&pooled) && violations.is_empty();
        Ok(SuiteOutcome::new(
            passed,
            format!("mean error at ell=50 {pooled:.3} (cells {lo:.3}..{hi:.3}); non-monotone curves: {}", if violations.is_empty() { "none".into() } else { violations.join(", ") }),
        ))
    }
}

struct ClientIndependence;

impl AcceptanceSuite for ClientIndependence {
    fn id(&self) -> &'static str {
        "client-independence"
    }
    fn criterion(&self) -> usize {
        5
    }
    fn limit(&self) -> Duration {
        Duration::from_secs(300)
    }
    fn check(&self) -> Result<SuiteOutcome> {
        let global = synth_dataset(SynthKind::Linear, 20, 20, 10_000, 505, &Default::default())?;
        let runs = 200;
        let small = accuracy_errors(&global, &ProtocolConfig { n: 10, ..mc_config() }, runs, 506)?;
        let large = accuracy_errors(&global, &ProtocolConfig { n: 100, ..mc_config() }, runs, 507)?;
        let ks = ks_two_sample(&small, &large)?;
        Ok(SuiteOutcome::new(
            ks.p_value > 0.05,
            format!("KS D = {:.3}, p = {:.3} ({runs} runs each; mean error {:.3} vs {:.3})", ks.statistic, ks.p_value, mean(&small), mean(&large)),
        ))
    }
}

struct Hiding;

impl AcceptanceSuite for Hiding {
    fn id(&self) -> &'static str {
        "hiding"
    }
    fn criterion(&self) -> usize {
        6
    }
    fn limit(&self) -> Duration {
        Duration::from_secs(60)
    }
    fn check(&self) -> Result<SuiteOutcome> {
        let spec = ExperimentSpec {
            seed: 606,
            samples: 40_000,
            grid: Grid { ell: vec![50], replicates: 100, ..Grid::default() },
            ..ExperimentSpec::default()
        };
        let rows = rank_check(&spec)?;
        let max_rank = rows.iter().map(|r| r.rank).max().unwrap_or(0);
        let min_nullity = rows.iter().map(|r| r.nullity).min().unwrap_or(0);
        let sketch_diff = rows.iter().map(|r| r.twin_sketch_diff).fold(0.0, f64::max);
        let cell_change = rows.iter().map(|r| r.twin_max_cell_change).fold(f64::INFINITY, f64::min);
        let passed = rows.len() == 100 && max_rank <= 90 && min_nullity >= 310 && sketch_diff < 1e-9 && cell_change > 1.0;
        Ok(SuiteOutcome::new(
            passed,
            format!("rank <= {max_rank}, nullity >= {min_nullity} over {} seeds; twin tables move a cell by >= {cell_change:.1}, sketch differs by <= {sketch_diff:.1e}", rows.len()),
        ))
    }
}

struct TailBound;

impl AcceptanceSuite for TailBound {
    fn id(&self) -> &'static str {
        "tail-bound"
    }
    fn criterion(&self) -> usize {
        7
    }
    fn limit(&self) -> Duration {
        Duration::from_secs(120)
    }
    fn check(&self) -> Result<SuiteOutcome> {
        let (eps, ell, trials) = (0.3, 50, 100_000u64);
        let u = UVector::new((1..=16).map(|k| k as f64).collect())?;
        let s = u.squared_norm();
        let (right, left) = (0..trials)
            .into_par_iter()
            .map(|t| {
                let r = decode_gm(&encode(&sample_projection(ell, u.len(), derive(707, &[t]))?, &u)?) / s;
                Ok::<_, Error>(((r > 1.0 + eps) as u64, (r < 1.0 - eps) as u64))
            })
            .try_reduce(|| (0, 0), |a, b| Ok((a.0 + b.0, a.1 + b.1)))?;
        let (p_right, p_left) = (right as f64 / trials as f64, left as f64 / trials as f64);
        // Any admissible ell0 gives a valid bound; check the loosest default and
        // the tightest choice, per tail and two-sided.
        let mut lines = Vec::new();
        let mut passed = true;
        for ell0 in [crate::sketch::DEFAULT_ELL0, ell - 1] {
            let params = TailBoundParams::new(eps, ell, ell0)?;
            let (br, bl) = (right_tail_bound(&params), left_tail_bound(&params)?);
            passed &= p_right <= br && p_left <= bl && p_right + p_left <= br + bl;
            lines.push(format!("ell0={ell0}: bounds {br:.4} + {bl:.4}"));
        }
        Ok(SuiteOutcome::new(passed, format!("empirical {p_right:.4} (right) + {p_left:.4} (left) = {:.4}; {}", p_right + p_left, lines.join("; "))))
    }
}

struct Caesar;

impl AcceptanceSuite for Caesar {
    fn id(&self) -> &'static str {
        "caesar"
    }
    fn criterion(&self) -> usize {
        8
    }
    fn limit(&self) -> Duration {
        Duration::from_secs(300)
    }
    fn check(&self) -> Result<SuiteOutcome> {
        let params = CaesarParams::default();
        let rates = [10, 30, 50]
            .iter()
            .map(|&ell| caesar_success_rate(&params, &ProtocolConfig { ell, ..mc_config() }, 808))
            .collect::<Result<Vec<_>>>()?;
        let monotone = rates.windows(2).all(|w| w[1] >= w[0]);
        Ok(SuiteOutcome::new(rates[2] >= 0.9 && monotone, format!("success rate at ell = 10/30/50: {rates:.2?} (L = {}, {} ciphertexts)", params.length, params.trials)))
    }
}

struct SaffronFdr;

impl AcceptanceSuite for SaffronFdr {
    fn id(&self) -> &'static str {
        "saffron-fdr"
    }
    fn criterion(&self) -> usize {
        9
    }
    fn limit(&self) -> Duration {
        Duration::from_secs(600)
    }
    fn check(&self) -> Result<SuiteOutcome> {
        let params = FdrParams::default();
        let cfg = ProtocolConfig { ell: 300, broadcast_by_seed: true, ..mc_config() };
        let calibrated = pvalue_method(&params.pvalue)?;
        let plain = pvalue_method("chi2")?;
        let (mut fdr, mut plain_fdr, mut rejections) = (Vec::new(), Vec::new(), 0);
        for s in 0..5u64 {
            let stream = hypothesis_stream(&params, &cfg, derive(909, &[s]))?;
            let run = saffron_over(&stream, calibrated.as_ref())?;
            rejections += run.rejections;
            fdr.push(run.fdr);
            plain_fdr.push(saffron_over(&stream, plain.as_ref())?.fdr);
        }
        let (m, se) = (mean(&fdr), std_error(&fdr));
        Ok(SuiteOutcome::new(
            m <= 0.05 + 2.0 * se,
            format!("mean FDR {m:.4} (se {se:.4}, {} p-values, {} rejections/seed); uncalibrated chi2 p-values: {:.4}", params.pvalue, rejections / 5, mean(&plain_fdr)),
        ))
    }
}

struct Cost;

impl AcceptanceSuite for Cost {
    fn id(&self) -> &'static str {
        "cost"
    }
    fn criterion(&self) -> usize {
        10
    }
    fn limit(&self) -> Duration {
        Duration::from_secs(120)
    }
    fn check(&self) -> Result<SuiteOutcome> {
        let spec = ExperimentSpec {
            seed: 1010,
            samples: 10_000,
            grid: Grid { n: vec![10, 100, 1000], ell: vec![25, 50, 100], side: vec![50, 100, 150, 200, 250, 300], ..Grid::default() },
            ..ExperimentSpec::default()
        };
        let sweep = cost_sweep(&spec)?;
        let (sent, total, time) = (&sweep.sent_fit, &sweep.total_fit, &sweep.timing_fit);
        let width = crate::secagg::FieldVector::ELEMENT_BYTES as f64;
        let slope_ok = (sent.per_ell - width).abs() <= 0.1 * width;
        let passed = sent.r_squared >= 0.99 && total.r_squared >= 0.99 && slope_ok && time.r_squared >= 0.99;
        if sweep.rows.is_empty() {
            return Err(Error::protocol("empty cost sweep"));
        }
        Ok(SuiteOutcome::new(
            passed,
            format!(
                "bytes sent: {:.1}/ell, {:.1}/neighbour, r2 {:.6}; sent+received r2 {:.6}; encode time vs m r2 {:.4}",
                sent.per_ell, sent.per_neighbor, sent.r_squared, total.r_squared, time.r_squared
            ),
        ))
    }
}

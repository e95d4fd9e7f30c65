//! Grid sweeps shared by the experiment commands and the acceptance suites.
//! Grid points run on the rayon pool; every point derives its seeds from the
//! root seed and its coordinates, so results do not depend on scheduling.

use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use super::spec::ExperimentSpec;
use crate::apps::caesar::caesar_success_rate;
use crate::apps::featsel::featsel_experiment;
use crate::apps::fdr::{fdr_run, FdrStepRow};
use crate::contingency::{build_u_vector, chi2_statistic, split_across_clients, synth_dataset, ContingencyTable, SynthKind};
use crate::error::Result;
use crate::protocol::{fed_chi2, fit_cost_model, leakage_rank_check, null_space_twin, CostFit, ProtocolConfig};
use crate::secagg::init_secure_agg;
use crate::seed::derive;
use crate::sketch::{encode, sample_projection};
use crate::stats::{mean, simple_regression, std_dev, LinearFit};

/// Relative errors `|s_hat - s| / s` of `runs` independent protocol runs on
/// fresh client partitions of `global`.
pub fn accuracy_errors(global: &ContingencyTable, config: &ProtocolConfig, runs: usize, seed: u64) -> Result<Vec<f64>> {
    config.validate()?;
    let oracle = chi2_statistic(global)?;
    (0..runs)
        .into_par_iter()
        .map(|r| {
            let r = r as u64;
            let clients = split_across_clients(global, config.n, derive(seed, &[r, 0]));
            let mut cfg = config.clone();
            cfg.seeds.graph = derive(seed, &[r, 1]);
            cfg.seeds.projection = derive(seed, &[r, 2]);
            cfg.seeds.key_agreement = derive(seed, &[r, 3]);
            let est = fed_chi2(&clients, &cfg)?.estimate;
            Ok((est - oracle).abs() / oracle)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AccuracyRow {
    pub dataset: SynthKind,
    pub n: usize,
    pub ell: usize,
    pub runs: usize,
    pub s_oracle: f64,
    pub mean_rel_error: f64,
    pub std_rel_error: f64,
}

fn dataset_index(kind: SynthKind) -> u64 {
    SynthKind::ALL.iter().position(|&k| k == kind).unwrap_or(0) as u64
}

/// Mean and standard deviation of the relative error over
/// `grid.datasets x grid.n x grid.ell`.
pub fn accuracy_sweep(spec: &ExperimentSpec) -> Result<Vec<AccuracyRow>> {
    let p = &spec.protocol;
    let mut points = Vec::new();
    for &dataset in &spec.grid.datasets {
        for &n in &spec.grid.n {
            for &ell in &spec.grid.ell {
                let cfg = ProtocolConfig { n, ell, ..p.clone() };
                cfg.validate()?;
                points.push((dataset, cfg));
            }
        }
    }
    let tables = spec
        .grid
        .datasets
        .iter()
        .map(|&d| Ok((d, synth_dataset(d, p.m_x, p.m_y, spec.samples, derive(spec.seed, &[0, dataset_index(d)]), &spec.synth)?)))
        .collect::<Result<Vec<_>>>()?;
    points
        .into_par_iter()
        .map(|(dataset, cfg)| {
            let global = &tables.iter().find(|(d, _)| *d == dataset).unwrap().1;
            let seed = derive(spec.seed, &[1, dataset_index(dataset), cfg.n as u64, cfg.ell as u64]);
            let errors = accuracy_errors(global, &cfg, spec.runs, seed)?;
            Ok(AccuracyRow {
                dataset,
                n: cfg.n,
                ell: cfg.ell,
                runs: spec.runs,
                s_oracle: chi2_statistic(global)?,
                mean_rel_error: mean(&errors),
                std_rel_error: std_dev(&errors),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaesarRow {
    pub length: usize,
    pub ell: usize,
    pub trials: usize,
    pub success_rate: f64,
}

pub fn caesar_sweep(spec: &ExperimentSpec) -> Result<Vec<CaesarRow>> {
    let mut rows = Vec::new();
    for &length in &spec.grid.length {
        for &ell in &spec.grid.ell {
            let params = crate::apps::caesar::CaesarParams { length, ..spec.caesar.clone() };
            let cfg = ProtocolConfig { ell, ..spec.protocol.clone() };
            let rate = caesar_success_rate(&params, &cfg, derive(spec.seed, &[length as u64]))?;
            rows.push(CaesarRow { length, ell, trials: params.trials, success_rate: rate });
        }
    }
    Ok(rows)
}

/// Per-step cumulative FDR for each `ell` and replicate seed.
pub fn fdr_sweep(spec: &ExperimentSpec) -> Result<Vec<FdrStepRow>> {
    let mut rows = Vec::new();
    for &ell in &spec.grid.ell {
        let cfg = ProtocolConfig { ell, ..spec.protocol.clone() };
        for r in 0..spec.grid.replicates {
            rows.extend(fdr_run(&spec.fdr, &cfg, derive(spec.seed, &[r as u64]))?.rows);
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeatselRow {
    pub seed: u64,
    pub ell: usize,
    pub k: usize,
    pub overlap: f64,
}

pub fn featsel_sweep(spec: &ExperimentSpec) -> Result<Vec<FeatselRow>> {
    let mut rows = Vec::new();
    for &ell in &spec.grid.ell {
        let cfg = ProtocolConfig { ell, ..spec.protocol.clone() };
        for r in 0..spec.grid.replicates {
            let seed = derive(spec.seed, &[r as u64]);
            let outcome = featsel_experiment(&spec.featsel, &cfg, spec.top_k, seed)?;
            rows.push(FeatselRow { seed, ell, k: spec.top_k, overlap: outcome.overlap });
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CostRow {
    pub n: usize,
    pub ell: usize,
    pub m_x: usize,
    pub m_y: usize,
    /// Mean number of masking neighbours per client.
    pub k: f64,
    pub bytes_sent: f64,
    pub bytes_total: f64,
    pub messages_sent: f64,
    pub encode_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimingRow {
    pub side: usize,
    pub m: usize,
    pub ell: usize,
    pub encode_seconds: f64,
}

#[derive(Debug, Clone)]
pub struct CostSweep {
    pub rows: Vec<CostRow>,
    /// Bytes sent per client against `ell`, `m_x + m_y` and `k`.
    pub sent_fit: CostFit,
    /// Bytes sent plus received per client, same regressors.
    pub total_fit: CostFit,
    pub timing: Vec<TimingRow>,
    /// Encoding time against `m`.
    pub timing_fit: LinearFit,
}

/// Fastest of `repeats` encodings of a random table of side `side`.
pub fn encode_timing(side: usize, ell: usize, repeats: usize, seed: u64) -> Result<TimingRow> {
    let table = synth_dataset(SynthKind::Independent, side, side, side * side * 4, seed, &Default::default())?;
    let u = build_u_vector(&table, &table.marginals(), 1)?;
    let p = sample_projection(ell, side * side, derive(seed, &[1]))?;
    let mut best = f64::INFINITY;
    for _ in 0..repeats {
        let start = Instant::now();
        let e = encode(&p, &u)?;
        best = best.min(start.elapsed().as_secs_f64());
        std::hint::black_box(e);
    }
    Ok(TimingRow { side, m: side * side, ell, encode_seconds: best })
}

/// Communication over `grid.n x grid.ell` at the configured table size, and
/// encoding time over `grid.side`. Points run one at a time so timings are
/// not disturbed by each other.
pub fn cost_sweep(spec: &ExperimentSpec) -> Result<CostSweep> {
    let p = &spec.protocol;
    let mut rows = Vec::new();
    for &n in &spec.grid.n {
        let global = synth_dataset(SynthKind::Linear, p.m_x, p.m_y, spec.samples.max(n * 4), derive(spec.seed, &[n as u64]), &spec.synth)?;
        let clients = split_across_clients(&global, n, derive(spec.seed, &[n as u64, 1]));
        for &ell in &spec.grid.ell {
            let cfg = ProtocolConfig { n, ell, ..p.clone() };
            let out = fed_chi2(&clients, &cfg)?;
            let mean_degree = if n > 1 { mean(&init_secure_agg(n, cfg.seeds.graph)?.degrees().iter().map(|&d| d as f64).collect::<Vec<_>>()) } else { 0.0 };
            rows.push(CostRow {
                n,
                ell,
                m_x: cfg.m_x,
                m_y: cfg.m_y,
                k: mean_degree,
                bytes_sent: out.cost.mean_bytes_sent(),
                bytes_total: out.cost.mean_bytes_total(),
                messages_sent: out.cost.mean_messages_sent(),
                encode_seconds: out.cost.timings.encode.as_secs_f64(),
            });
        }
    }
    let points = |f: fn(&CostRow) -> f64| rows.iter().map(|r| (r.ell as f64, (r.m_x + r.m_y) as f64, r.k, f(r))).collect::<Vec<_>>();
    let sent_fit = fit_cost_model(&points(|r| r.bytes_sent))?;
    let total_fit = fit_cost_model(&points(|r| r.bytes_total))?;
    let ell = p.ell;
    let timing = spec.grid.side.iter().map(|&side| encode_timing(side, ell, spec.timing_repeats, derive(spec.seed, &[2, side as u64]))).collect::<Result<Vec<_>>>()?;
    let m: Vec<f64> = timing.iter().map(|t| t.m as f64).collect();
    let secs: Vec<f64> = timing.iter().map(|t| t.encode_seconds).collect();
    let timing_fit = simple_regression(&m, &secs)?;
    Ok(CostSweep { rows, sent_fit, total_fit, timing, timing_fit })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankRow {
    pub seed: u64,
    pub ell: usize,
    pub m_x: usize,
    pub m_y: usize,
    pub rank: usize,
    pub nullity: usize,
    /// Largest cell change of the null-space twin table.
    pub twin_max_cell_change: f64,
    /// Relative change of the exact statistic between the two tables.
    pub twin_chi2_change: f64,
    /// Largest relative difference between the two sketches.
    pub twin_sketch_diff: f64,
}

/// Rank of the server's linear view, and a twin table with identical view,
/// for `grid.replicates` projection seeds at each `grid.ell`.
pub fn rank_check(spec: &ExperimentSpec) -> Result<Vec<RankRow>> {
    let p = &spec.protocol;
    let table = synth_dataset(SynthKind::Independent, p.m_x, p.m_y, spec.samples, derive(spec.seed, &[0]), &spec.synth)?;
    let marginals = table.marginals();
    marginals.require_positive()?;
    let mut points = Vec::new();
    for &ell in &spec.grid.ell {
        for r in 0..spec.grid.replicates {
            points.push((ell, derive(spec.seed, &[1, ell as u64, r as u64])));
        }
    }
    points
        .into_par_iter()
        .map(|(ell, seed)| {
            let proj = sample_projection(ell, p.m(), seed)?;
            let report = leakage_rank_check(Some(&proj), p.m_x, p.m_y);
            let twin = null_space_twin(&table, &marginals, &proj, derive(seed, &[1]))?;
            let u = build_u_vector(&table, &marginals, 1)?;
            let u_twin = crate::contingency::u_vector_from_real_counts(&twin.counts, &marginals, 1)?;
            let (e, e_twin) = (encode(&proj, &u)?, encode(&proj, &u_twin)?);
            let sketch_diff = e.values().iter().zip(e_twin.values()).map(|(a, b)| (a - b).abs() / a.abs().max(1e-12)).fold(0.0, f64::max);
            let s = chi2_statistic(&table)?;
            let s_twin = crate::contingency::chi2_from_real_counts(&twin.counts, &marginals)?;
            let max_change = table.counts().iter().zip(&twin.counts).map(|(&a, b)| (a as f64 - b).abs()).fold(0.0, f64::max);
            Ok(RankRow {
                seed,
                ell,
                m_x: p.m_x,
                m_y: p.m_y,
                rank: report.rank,
                nullity: report.nullity,
                twin_max_cell_change: max_change,
                twin_chi2_change: (s_twin - s).abs() / s,
                twin_sketch_diff: sketch_diff,
            })
        })
        .collect()
}

use std::io::Write;

use serde::Serialize;

use super::spec::ExperimentSpec;
use super::sweeps;
use crate::error::Result;
use crate::registry::Registry;

/// A named experiment that writes a commented header line followed by CSV.
pub trait Experiment: Send + Sync {
    fn name(&self) -> &'static str;
    fn about(&self) -> &'static str;
    fn run(&self, spec: &ExperimentSpec, out: &mut dyn Write) -> Result<()>;
}

fn write_csv<T: Serialize>(spec: &ExperimentSpec, rows: &[T], out: &mut dyn Write) -> Result<()> {
    writeln!(out, "# {}", spec.fingerprint())?;
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

struct AccuracySweep;

impl Experiment for AccuracySweep {
    fn name(&self) -> &'static str {
        "accuracy-sweep"
    }
    fn about(&self) -> &'static str {
        "relative error of the federated statistic over datasets, client counts and encoding sizes"
    }
    fn run(&self, spec: &ExperimentSpec, out: &mut dyn Write) -> Result<()> {
        write_csv(spec, &sweeps::accuracy_sweep(spec)?, out)
    }
}

struct Caesar;

impl Experiment for Caesar {
    fn name(&self) -> &'static str {
        "caesar"
    }
    fn about(&self) -> &'static str {
        "Caesar-cipher success rate over ciphertext lengths and encoding sizes"
    }
    fn run(&self, spec: &ExperimentSpec, out: &mut dyn Write) -> Result<()> {
        write_csv(spec, &sweeps::caesar_sweep(spec)?, out)
    }
}

struct Fdr;

impl Experiment for Fdr {
    fn name(&self) -> &'static str {
        "fdr"
    }
    fn about(&self) -> &'static str {
        "online FDR of SAFFRON over a stream of federated tests, per step"
    }
    fn run(&self, spec: &ExperimentSpec, out: &mut dyn Write) -> Result<()> {
        write_csv(spec, &sweeps::fdr_sweep(spec)?, out)
    }
}

struct Featsel;

impl Experiment for Featsel {
    fn name(&self) -> &'static str {
        "featsel"
    }
    fn about(&self) -> &'static str {
        "overlap between federated and exact top-k feature selection"
    }
    fn run(&self, spec: &ExperimentSpec, out: &mut dyn Write) -> Result<()> {
        write_csv(spec, &sweeps::featsel_sweep(spec)?, out)
    }
}

struct CostSweep;

impl Experiment for CostSweep {
    fn name(&self) -> &'static str {
        "cost-sweep"
    }
    fn about(&self) -> &'static str {
        "per-client communication over n and ell, plus encoding time over table size"
    }
    fn run(&self, spec: &ExperimentSpec, out: &mut dyn Write) -> Result<()> {
        let sweep = sweeps::cost_sweep(spec)?;
        write_csv(spec, &sweep.rows, out)?;
        for (name, f) in [("sent", &sweep.sent_fit), ("total", &sweep.total_fit)] {
            writeln!(
                out,
                "# fit {name}: bytes = {:.3} + {:.3}*ell + {:.3}*(m_x+m_y) + {:.3}*k  (r2 = {:.6})",
                f.intercept, f.per_ell, f.per_marginal, f.per_neighbor, f.r_squared
            )?;
        }
        for t in &sweep.timing {
            writeln!(out, "# encode side={} m={} ell={} seconds={:.6e}", t.side, t.m, t.ell, t.encode_seconds)?;
        }
        writeln!(out, "# fit encode: seconds per cell = {:.3e}  (r2 = {:.6})", sweep.timing_fit.coefficients[1], sweep.timing_fit.r_squared)?;
        Ok(())
    }
}

struct RankCheck;

impl Experiment for RankCheck {
    fn name(&self) -> &'static str {
        "rank-check"
    }
    fn about(&self) -> &'static str {
        "rank of the server's linear view and a twin table it cannot tell apart"
    }
    fn run(&self, spec: &ExperimentSpec, out: &mut dyn Write) -> Result<()> {
        write_csv(spec, &sweeps::rank_check(spec)?, out)
    }
}

pub fn experiments() -> Registry<dyn Experiment> {
    let mut r: Registry<dyn Experiment> = Registry::new("experiment");
    let all: Vec<Box<dyn Experiment>> = vec![Box::new(AccuracySweep), Box::new(Caesar), Box::new(Fdr), Box::new(Featsel), Box::new(CostSweep), Box::new(RankCheck)];
    for e in all {
        r.register(e.name(), e);
    }
    r
}

/// Runs the experiment registered as `name`.
pub fn run_experiment(name: &str, spec: &ExperimentSpec, out: &mut dyn Write) -> Result<()> {
    experiments().get(name)?.run(spec, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contingency::SynthKind;
    use crate::harness::Grid;
    use crate::protocol::ProtocolConfig;

    fn small() -> ExperimentSpec {
        ExperimentSpec {
            runs: 3,
            samples: 2000,
            protocol: ProtocolConfig { m_x: 5, m_y: 5, key_agreement: "test".into(), ..ProtocolConfig::default() },
            grid: Grid { n: vec![3, 6], ell: vec![10, 12], datasets: vec![SynthKind::Linear, SynthKind::Independent], side: vec![10, 20, 30], replicates: 2, ..Grid::default() },
            ..ExperimentSpec::default()
        }
    }

    #[test]
    fn accuracy_sweep_is_deterministic_and_complete() {
        let spec = small();
        let mut a = Vec::new();
        run_experiment("accuracy-sweep", &spec, &mut a).unwrap();
        let mut b = Vec::new();
        run_experiment("accuracy-sweep", &spec, &mut b).unwrap();
        assert_eq!(a, b);
        let text = String::from_utf8(a).unwrap();
        assert!(text.starts_with("# "));
        assert_eq!(text.lines().count(), 2 + 8);
        assert!(text.lines().nth(1).unwrap().starts_with("dataset,n,ell,runs"));
    }

    #[test]
    fn unknown_experiment_is_a_config_error() {
        assert!(run_experiment("nope", &small(), &mut Vec::new()).unwrap_err().is_config());
        assert_eq!(experiments().len(), 6);
    }

    #[test]
    fn rank_check_and_cost_sweep_run() {
        let spec = small();
        let rows = sweeps::rank_check(&spec).unwrap();
        assert_eq!(rows.len(), 4);
        for r in rows {
            assert_eq!(r.rank + r.nullity, 25);
            assert!(r.twin_sketch_diff < 1e-6);
        }
        let mut out = Vec::new();
        run_experiment("cost-sweep", &spec, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.contains("# fit sent"));
    }
}

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fedchi::apps::pvalue_method;
use fedchi::contingency::{chi2_statistic, split_across_clients, synth_dataset, ContingencyTable, SynthKind};
use fedchi::harness::{experiments, run_acceptance, run_experiment, ExperimentSpec};
use fedchi::protocol::fed_chi2;
use fedchi::{Error, Result};

#[derive(Parser)]
#[command(name = "fedchi", version, about = "Federated chi-square tests with secure aggregation and stable projections")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Experiment config (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output CSV; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Root seed, overriding the config.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Relative error over datasets, client counts and encoding sizes.
    AccuracySweep(Common),
    /// Caesar-cipher success rate over ciphertext lengths and encoding sizes.
    Caesar(Common),
    /// Online FDR of SAFFRON over a stream of federated tests.
    Fdr(Common),
    /// Federated vs exact top-k feature selection.
    Featsel(Common),
    /// Per-client communication and encoding time.
    CostSweep(Common),
    /// Rank of the server's view and a twin table it cannot distinguish.
    RankCheck(Common),
    /// Runs the experiment named by the config's `command` field.
    Run(Common),
    /// Writes a synthetic contingency table as CSV.
    Generate {
        #[arg(long, default_value = "linear")]
        dataset: String,
        #[arg(long, default_value_t = 20)]
        m_x: usize,
        #[arg(long, default_value_t = 20)]
        m_y: usize,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Splits a CSV table across clients and runs one federated test.
    Estimate {
        /// Contingency table CSV.
        #[arg(long)]
        table: PathBuf,
        /// Experiment config whose `[protocol]` section is used.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Registered p-value method.
        #[arg(long, default_value = "calibrated")]
        pvalue: String,
    },
    /// Runs acceptance suites and prints one line per criterion.
    Acceptance {
        /// Suite id, or "all".
        #[arg(long, default_value = "all")]
        suite: String,
    },
    /// Lists registered experiments.
    List,
}

enum Failure {
    Error(Error),
    Acceptance,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Error(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Error(e.into())
    }
}

fn load_spec(common: &Common, command: Option<&str>) -> Result<ExperimentSpec> {
    let mut spec = match &common.config {
        Some(path) => ExperimentSpec::load(path)?,
        None => ExperimentSpec::default(),
    };
    if let Some(c) = command {
        spec.command = c.to_string();
    }
    if let Some(seed) = common.seed {
        spec.seed = seed;
    }
    if let Some(out) = &common.out {
        spec.output = Some(out.clone());
    }
    spec.validate()?;
    Ok(spec)
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn experiment(common: &Common, command: Option<&str>) -> std::result::Result<(), Failure> {
    let spec = load_spec(common, command)?;
    let mut out = open_output(spec.output.as_deref())?;
    run_experiment(&spec.command, &spec, &mut out)?;
    out.flush()?;
    Ok(())
}

fn run(cli: Cli) -> std::result::Result<(), Failure> {
    match cli.command {
        Command::AccuracySweep(c) => experiment(&c, Some("accuracy-sweep")),
        Command::Caesar(c) => experiment(&c, Some("caesar")),
        Command::Fdr(c) => experiment(&c, Some("fdr")),
        Command::Featsel(c) => experiment(&c, Some("featsel")),
        Command::CostSweep(c) => experiment(&c, Some("cost-sweep")),
        Command::RankCheck(c) => experiment(&c, Some("rank-check")),
        Command::Run(c) => experiment(&c, None),
        Command::Generate { dataset, m_x, m_y, samples, seed, out } => {
            let kind: SynthKind = dataset.parse()?;
            let table = synth_dataset(kind, m_x, m_y, samples, seed, &Default::default())?;
            let mut w = open_output(out.as_deref())?;
            table.write_csv(&mut w)?;
            w.flush()?;
            Ok(())
        }
        Command::Estimate { table, config, seed, pvalue } => {
            let spec = load_spec(&Common { config, out: None, seed }, None)?;
            let table = ContingencyTable::load(&table)?;
            let mut cfg = spec.protocol.clone();
            cfg.m_x = table.rows();
            cfg.m_y = table.cols();
            let clients = split_across_clients(&table, cfg.n, spec.seed);
            let outcome = fed_chi2(&clients, &cfg)?;
            let oracle = chi2_statistic(&table)?;
            let p = pvalue_method(&pvalue)?.p_value(outcome.estimate, cfg.dof(), cfg.ell);
            println!("clients          {}", cfg.n);
            println!("ell              {}", cfg.ell);
            println!("chi2 (exact)     {oracle:.4}");
            println!("chi2 (federated) {:.4}", outcome.estimate);
            println!("relative error   {:.4}", (outcome.estimate - oracle).abs() / oracle);
            println!("p-value ({pvalue}) {:.4e}", p.p);
            println!("reject at {}     {}", cfg.significance, p.p < cfg.significance);
            println!("bytes per client {:.0} sent, {:.0} total", outcome.cost.mean_bytes_sent(), outcome.cost.mean_bytes_total());
            Ok(())
        }
        Command::Acceptance { suite } => {
            let reports = run_acceptance(&suite)?;
            for r in &reports {
                println!("{r}");
            }
            if reports.iter().all(|r| r.passed) {
                Ok(())
            } else {
                Err(Failure::Acceptance)
            }
        }
        Command::List => {
            for (name, e) in experiments().iter() {
                println!("{name:<16} {}", e.about());
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Acceptance) => ExitCode::from(3),
        Err(Failure::Error(e)) => {
            eprintln!("fedchi: {e}");
            ExitCode::from(if e.is_config() { 2 } else { 1 })
        }
    }
}

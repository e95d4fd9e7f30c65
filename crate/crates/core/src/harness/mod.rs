//! Experiment specs, sweep drivers and the acceptance suites, each
//! selectable by name.

mod acceptance;
mod experiments;
mod spec;
mod sweeps;

pub use acceptance::{acceptance_suites, run_acceptance, AcceptanceSuite, SuiteOutcome, SuiteReport};
pub use experiments::{experiments, run_experiment, Experiment};
pub use spec::{ExperimentSpec, Grid};
pub use sweeps::{
    accuracy_errors, accuracy_sweep, caesar_sweep, cost_sweep, encode_timing, fdr_sweep, featsel_sweep, rank_check, AccuracyRow, CaesarRow, CostRow, CostSweep, FeatselRow, RankRow, TimingRow,
};

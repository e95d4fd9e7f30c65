//! The two-round protocol end to end over a simulated network.
//!
//! Round 1 reveals the marginals through secure aggregation. Round 2
//! broadcasts a projection, each client encodes its u-vector, the sketches
//! are securely summed, and the server decodes the estimate.

mod config;
mod cost;
mod leakage;
mod results;
mod session;

pub use config::{MarginalMode, ProtocolConfig, Seeds};
pub use cost::{cost_report, fit_cost_model, ClientCost, CostFit, CostReport, PhaseTimings};
pub use leakage::{constraint_matrix, leakage_rank_check, null_space_twin, LeakageReport, NullSpaceTwin};
pub use results::{write_results, ResultRow};
pub use session::{fed_chi2, RunOutcome, ServerView, Session};

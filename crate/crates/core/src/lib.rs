//! Federated chi-squared correlation testing.
//!
//! Clients each hold a share of a contingency table. The global chi-squared
//! statistic is recast as the squared l2 norm of a sum of per-client vectors,
//! compressed by a shared Gaussian (2-stable) random projection, summed through
//! pairwise-masked secure aggregation over a Harary graph, and recovered on the
//! server with the geometric-mean estimator. Only the marginals and the
//! aggregate sketch are ever visible to the server.
//!
//! Module map:
//! - [`contingency`]: tables, marginals, the centralized statistic, u-vectors, generators.
//! - [`sketch`]: projection sampling, encoding, geometric-mean decoding, tail bounds.
//! - [`secagg`]: Harary graphs, key agreement, PRG masks, fixed-point codec, masked rounds.
//! - [`protocol`]: the two-round protocol, server view, leakage check, cost accounting.
//! - [`apps`]: p-values, feature selection, Caesar cryptanalysis, SAFFRON.
//! - [`harness`]: experiment specs, sweeps and the acceptance suites.

pub mod apps;
pub mod contingency;
pub mod error;
pub mod harness;
pub mod protocol;
pub mod registry;
pub mod secagg;
pub mod seed;
pub mod sketch;
pub mod stats;

pub use error::{Error, Result};

//! Contingency tables, marginals and the centralized chi-squared oracle.

mod io;
mod split;
mod synth;
mod table;
mod uvec;

pub use split::split_across_clients;
pub use synth::{synth_dataset, synth_pairs, SynthKind, SynthRecipe};
pub use table::{chi2_from_real_counts, chi2_statistic, flatten_index, unflatten_index, ContingencyTable, Marginals, Shape};
pub use uvec::{build_u_vector, u_vector_from_real_counts, UVector};

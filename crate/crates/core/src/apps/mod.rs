//! Downstream uses of the federated statistic: p-values, feature
//! selection, Caesar-cipher cryptanalysis and online FDR control.

pub mod caesar;
pub mod fdr;
pub mod featsel;
pub mod pvalue;
pub mod saffron;

pub use caesar::{crack_caesar, CaesarOutcome, CipherTrial};
pub use featsel::select_features;
pub use pvalue::{chi2_sf, pvalue_method, pvalue_methods, CalibratedSf, Chi2Sf, PValue, PValueMethod};
pub use saffron::{gamma_sequence, saffron_step, SaffronParams, SaffronState};

//! Stable-projection sketching of the squared l2 norm.
//!
//! A shared matrix of i.i.d. standard 2-stable variates (characteristic
//! function `exp(-t^2)`, i.e. `N(0, 2)`) maps each client's u-vector to a short
//! sketch. Sketches add, and every coordinate of the summed sketch is a 2-stable
//! variate whose scale is the squared norm of the summed u-vectors. The
//! geometric-mean estimator recovers that scale without bias.

mod estimator;
mod projection;
mod tail;

pub use estimator::{decode_gm, gm_log_correction};
pub use projection::{encode, sample_projection, ProjectionMatrix, SketchVector, MIN_ELL};
pub use tail::{best_two_sided_bound, left_exponent, right_exponent, left_tail_bound, required_ell, right_tail_bound, two_sided_bound, TailBoundParams, DEFAULT_ELL0, EULER_GAMMA};

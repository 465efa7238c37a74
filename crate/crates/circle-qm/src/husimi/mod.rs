//! Bargmann functions, Husimi densities, strip zeros and the periodic
//! Hadamard product.

mod bargmann;
mod field;
mod hadamard;
mod identities;
mod zeros;

pub use bargmann::{bargmann_eval, BargmannFunction, ScaledValue};
pub use field::{husimi_field, CylinderGrid, HusimiField};
pub use hadamard::{fit_constant, hadamard_reconstruct, reconstruct, HadamardEvaluator};
pub use identities::{branch_corrected_log_product, direct_product, sin_hadamard_truncated};
pub use zeros::{determine_l, find_strip_zeros, nu_of, strip_distance, strip_zero_count, StripZeros};

//! Quantum mechanics on the circle: complexifier coherent states, Husimi
//! zeros with Hadamard reconstruction, and the semiclassical coherent-state
//! propagator with winding numbers.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod export;
pub mod husimi;
pub mod quadrature;
pub mod semiclassics;
pub mod states;
pub mod theta;

pub use error::{Error, Result};
pub use num_complex::Complex64;

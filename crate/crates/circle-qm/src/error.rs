use num_complex::Complex64;
use thiserror::Error;

use crate::theta::Route;

/// Errors surfaced by the numerical kernels.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{route:?} lattice sum did not converge within {budget} terms")]
    NonConvergence { route: Route, budget: usize },

    #[error("coefficient window of {needed} indices exceeds the budget of {budget}")]
    WindowOverflow { needed: usize, budget: usize },

    #[error("result exceeds the floating-point range")]
    RangeOverflow,

    #[error("state has zero norm")]
    ZeroNorm,

    #[error("quadrature order {requested} exceeds the budget of {budget}")]
    QuadratureBudget { requested: usize, budget: usize },

    #[error("evaluation at Im z = {im} is outside the safe band [{lo}, {hi}]")]
    Overflow { im: f64, lo: f64, hi: f64 },

    #[error("contour passes within tolerance of a zero near {near}")]
    BoundaryZero { near: Complex64 },

    #[error("zero count mismatch: contour winding {expected}, polished zeros {found}")]
    CountMismatch { expected: i64, found: i64 },

    #[error("undetermined: {0}")]
    Undetermined(String),

    #[error("cotangent or sine pole at {0}")]
    Pole(Complex64),

    #[error("product does not converge: {0}")]
    ProductConvergence(String),

    #[error("overlap denominator vanishes at w = {w}, z = {z}")]
    NearZeroDenominator { w: Complex64, z: Complex64 },

    #[error("boundary-value problem did not converge for winding {winding}")]
    BvpNoConvergence { winding: i64 },

    #[error("step halving changed v(tau) by {change:e}")]
    StepResolution { change: f64 },

    #[error("Riccati blow-up (caustic) at t = {time}")]
    Caustic { time: f64 },

    #[error("oracle window too small: edge coefficient ratio {ratio:e}")]
    WindowTooSmall { ratio: f64 },
}

impl Error {
    /// Short machine-readable tag.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::NonConvergence { .. } => "non_convergence",
            Error::WindowOverflow { .. } => "window_overflow",
            Error::RangeOverflow => "range_overflow",
            Error::ZeroNorm => "zero_norm",
            Error::QuadratureBudget { .. } => "quadrature_budget",
            Error::Overflow { .. } => "overflow",
            Error::BoundaryZero { .. } => "boundary_zero",
            Error::CountMismatch { .. } => "count_mismatch",
            Error::Undetermined(_) => "undetermined",
            Error::Pole(_) => "pole",
            Error::ProductConvergence(_) => "product_convergence",
            Error::NearZeroDenominator { .. } => "near_zero_denominator",
            Error::BvpNoConvergence { .. } => "no_convergence",
            Error::StepResolution { .. } => "step_resolution",
            Error::Caustic { .. } => "caustic",
            Error::WindowTooSmall { .. } => "window_too_small",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

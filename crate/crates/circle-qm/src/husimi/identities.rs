use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

use super::zeros::nu_of;
use crate::error::{Error, Result};

const POLE_TOL: f64 = 1e-14;

fn cot(z: Complex64) -> Complex64 {
    z.cos() / z.sin()
}

fn check_strip(a: Complex64) -> Result<()> {
    if (a / 2.0).sin().norm() < POLE_TOL {
        return Err(Error::Pole(a));
    }
    if !(a.re >= 0.0 && a.re < TAU) {
        return Err(Error::InvalidParameter(format!("{a} is outside the fundamental strip")));
    }
    Ok(())
}

/// `Σ_k π (cot(a_k/2) + ν_k i)`, the exponent of `∏_k [−exp(π cot(a_k/2))]`.
pub fn branch_corrected_log_product(a_list: &[Complex64]) -> Result<Complex64> {
    let mut sum = Complex64::new(0.0, 0.0);
    for a in a_list {
        check_strip(*a)?;
        sum += PI * (cot(a / 2.0) + Complex64::new(0.0, nu_of(*a) as f64));
    }
    Ok(sum)
}

/// `∏_k [−exp(π cot(a_k/2))]` evaluated factor by factor.
pub fn direct_product(a_list: &[Complex64]) -> Result<Complex64> {
    let mut prod = Complex64::new(1.0, 0.0);
    for a in a_list {
        check_strip(*a)?;
        prod *= -(PI * cot(a / 2.0)).exp();
    }
    Ok(prod)
}

/// `−sin(a/2)(1 − z/a) ∏_{n=1}^{N} (1 − z/(a+2πn))(1 − z/(a−2πn))`.
pub fn sin_hadamard_truncated(z: Complex64, a: Complex64, n_terms: usize) -> Result<Complex64> {
    let k = (a.re / TAU).round();
    if a.im == 0.0 && a.re == k * TAU {
        return Err(Error::Pole(a));
    }
    let mut prod = -(a / 2.0).sin() * (1.0 - z / a);
    for n in 1..=n_terms {
        let shift = TAU * n as f64;
        prod *= (1.0 - z / (a + shift)) * (1.0 - z / (a - shift));
    }
    Ok(prod)
}

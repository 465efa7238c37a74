use std::f64::consts::TAU;

use num_complex::Complex64;

use super::bargmann::BargmannFunction;
use super::zeros::{determine_l, find_strip_zeros, StripZeros};
use crate::error::{Error, Result};
use crate::states::Representation;

const REF_SAMPLES: usize = 512;

/// Periodic Hadamard product
/// `e^{C+i(l−δ)z} [sin(z/2) e^{−iz/2}]^m ∏ sin((z−a)/2)/sin(−a/2) · e^{−iνz/2}`.
#[derive(Debug, Clone, PartialEq)]
pub struct HadamardEvaluator {
    pub rep: Representation,
    pub zeros: StripZeros,
    l: i64,
    c: Complex64,
}

impl HadamardEvaluator {
    pub fn l(&self) -> i64 {
        self.l
    }

    pub fn constant(&self) -> Complex64 {
        self.c
    }

    pub fn with_constant(mut self, c: Complex64) -> Self {
        self.c = c;
        self.zeros.c = Some(c);
        self
    }

    /// Logarithm of the product, on no particular branch.
    pub fn log_eval(&self, z: Complex64) -> Complex64 {
        let i = Complex64::i();
        let half = z / 2.0;
        let mut acc = self.c + i * (self.l as f64 - self.rep.delta) * z;
        if self.zeros.m > 0 {
            acc += self.zeros.m as f64 * ((half).sin() * (-i * half).exp()).ln();
        }
        for (a, nu) in self.zeros.a_list.iter().zip(&self.zeros.nu_list) {
            let ratio = ((z - a) / 2.0).sin() / (-a / 2.0).sin();
            acc += ratio.ln() - i * *nu as f64 * half;
        }
        acc
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.log_eval(z).exp()
    }
}

/// Build the product from strip zeros with `l` set. An unset `C` is taken
/// as zero, so the evaluator is then correct up to an overall constant.
pub fn hadamard_reconstruct(zeros: &StripZeros, rep: Representation) -> Result<HadamardEvaluator> {
    rep.validate()?;
    zeros.validate()?;
    let l = zeros.l.ok_or_else(|| Error::Undetermined("l has not been determined".into()))?;
    let c = zeros.c.unwrap_or(Complex64::new(0.0, 0.0));
    Ok(HadamardEvaluator { rep, zeros: zeros.clone(), l, c })
}

/// Fit `C` at the real-axis point where `|ψ|` is largest.
pub fn fit_constant(f: &BargmannFunction, ev: &HadamardEvaluator) -> Result<Complex64> {
    f.check_band(0.0)?;
    let (z_ref, sv) = (0..REF_SAMPLES)
        .map(|j| {
            let z = Complex64::new(TAU * (j as f64 + 0.5) / REF_SAMPLES as f64, 0.0);
            (z, f.eval_scaled_unchecked(z))
        })
        .max_by(|a, b| a.1.ln_abs().total_cmp(&b.1.ln_abs()))
        .expect("samples are nonempty");
    let log_psi = sv.value.ln() + sv.log_scale;
    let bare = HadamardEvaluator { c: Complex64::new(0.0, 0.0), ..ev.clone() };
    let c = log_psi - bare.log_eval(z_ref);
    if !(c.re.is_finite() && c.im.is_finite()) {
        return Err(Error::Undetermined("reference point lies on a zero".into()));
    }
    Ok(c)
}

/// Zeros, `l` and `C` of `f`, with the resulting product evaluator.
pub fn reconstruct(f: &BargmannFunction, im_cutoff: f64, tol: f64) -> Result<HadamardEvaluator> {
    let mut zeros = find_strip_zeros(f, im_cutoff, tol)?;
    zeros.l = Some(determine_l(f, &zeros)?);
    let ev = hadamard_reconstruct(&zeros, f.rep)?;
    let c = fit_constant(f, &ev)?;
    Ok(ev.with_constant(c))
}

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::states::{reduce_angle, Representation, StateVector};

/// Relative size of the omitted tail allowed inside the safe band.
const TAIL_BUDGET: f64 = 1e-13;

/// A value `mantissa · exp(log_scale)` with its derivative and absolute-term scale
/// carried in the same scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledValue {
    pub value: Complex64,
    pub deriv: Complex64,
    /// `Σ |terms|` in the same scale, used for relative residuals.
    pub abs_sum: f64,
    pub log_scale: f64,
}

impl ScaledValue {
    pub fn unscaled(&self) -> Option<(Complex64, Complex64)> {
        let e = self.log_scale.exp();
        let v = self.value * e;
        let d = self.deriv * e;
        if v.re.is_finite() && v.im.is_finite() && d.re.is_finite() && d.im.is_finite() {
            Some((v, d))
        } else {
            None
        }
    }

    /// `ln|value|`.
    pub fn ln_abs(&self) -> f64 {
        self.value.norm().ln() + self.log_scale
    }
}

/// The Bargmann–Segal function `z ↦ ⟨ψ|z⟩` of a state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BargmannFunction {
    pub rep: Representation,
    pub psi: StateVector,
    /// Relative size of coefficients dropped when `psi` was truncated;
    /// `None` when `psi` is the exact state.
    #[serde(default)]
    pub truncation: Option<f64>,
}

impl BargmannFunction {
    pub fn new(rep: Representation, psi: StateVector) -> Self {
        BargmannFunction { rep, psi: psi.trimmed(), truncation: None }
    }

    pub fn truncated(rep: Representation, psi: StateVector, tol: f64) -> Self {
        BargmannFunction { rep, psi: psi.trimmed(), truncation: Some(tol) }
    }

    fn log_terms(&self, y: f64) -> impl Iterator<Item = (f64, Complex64, f64)> + '_ {
        let s2 = self.rep.s2();
        let delta = self.rep.delta;
        self.psi.indexed().filter(|(_, c)| c.norm() > 0.0).map(move |(n, c)| {
            let x = n as f64 + delta;
            (x, c.conj(), c.norm().ln() - x * x * s2 / 2.0 + x * y)
        })
    }

    /// Band of `Im z` where the truncated series is trustworthy.
    ///
    /// Exact states are limited only by overflow of individual terms, which
    /// the scaled evaluators never hit, so their band is unbounded.
    pub fn safe_band(&self) -> (f64, f64) {
        let Some(eps) = self.truncation else {
            return (f64::NEG_INFINITY, f64::INFINITY);
        };
        if self.psi.is_empty() {
            return (0.0, 0.0);
        }
        let s2 = self.rep.s2();
        let x_lo = self.psi.n_min as f64 + self.rep.delta;
        let x_hi = self.psi.n_max() as f64 + self.rep.delta;
        let cmax = self.psi.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let ok = |y: f64| {
            if y / s2 < x_lo || y / s2 > x_hi {
                return false;
            }
            let best = self.log_terms(y).map(|t| t.2).fold(f64::NEG_INFINITY, f64::max);
            let edge = |x: f64| (eps * cmax).ln() - x * x * s2 / 2.0 + x * y;
            let worst = edge(x_lo - 1.0).max(edge(x_hi + 1.0));
            worst <= TAIL_BUDGET.ln() + best
        };
        let centre = s2 * (x_lo + x_hi) / 2.0;
        if !ok(centre) {
            return (centre, centre);
        }
        let search = |dir: f64| {
            let mut inside = centre;
            let mut step = s2;
            let mut outside = centre + dir * step;
            while ok(outside) {
                inside = outside;
                step *= 2.0;
                outside = centre + dir * step;
            }
            for _ in 0..60 {
                let mid = 0.5 * (inside + outside);
                if ok(mid) {
                    inside = mid;
                } else {
                    outside = mid;
                }
            }
            inside
        };
        (search(-1.0), search(1.0))
    }

    pub fn check_band(&self, im: f64) -> Result<()> {
        let (lo, hi) = self.safe_band();
        if im < lo || im > hi {
            Err(Error::Overflow { im, lo, hi })
        } else {
            Ok(())
        }
    }

    /// Value and derivative in scaled form, without the band check.
    pub fn eval_scaled_unchecked(&self, z: Complex64) -> ScaledValue {
        let (phi, k) = reduce_angle(z.re);
        let shift = self.rep.shift_phase(k);
        let log_scale = self.log_terms(z.im).map(|t| t.2).fold(f64::NEG_INFINITY, f64::max);
        let mut value = Complex64::new(0.0, 0.0);
        let mut deriv = Complex64::new(0.0, 0.0);
        let mut abs_sum = 0.0;
        for (x, cc, lt) in self.log_terms(z.im) {
            let t = cc / cc.norm() * Complex64::from_polar((lt - log_scale).exp(), -x * phi);
            value += t;
            deriv += t * Complex64::new(0.0, -x);
            abs_sum += t.norm();
        }
        ScaledValue { value: value * shift, deriv: deriv * shift, abs_sum, log_scale }
    }

    pub fn eval_scaled(&self, z: Complex64) -> Result<ScaledValue> {
        self.check_band(z.im)?;
        Ok(self.eval_scaled_unchecked(z))
    }

    /// `ψ(z)` and `ψ'(z)`.
    pub fn eval_with_derivative(&self, z: Complex64) -> Result<(Complex64, Complex64)> {
        let sv = self.eval_scaled(z)?;
        sv.unscaled().ok_or(Error::RangeOverflow)
    }

    pub fn eval(&self, z: Complex64) -> Result<Complex64> {
        Ok(self.eval_with_derivative(z)?.0)
    }

    /// Coefficients of `P(w)` in `ψ(z) = e^{−i(n₀+δ)z} P(e^{−iz})`, lowest power first.
    pub fn polynomial(&self) -> Vec<Complex64> {
        let s2 = self.rep.s2();
        self.psi
            .indexed()
            .map(|(n, c)| {
                let x = n as f64 + self.rep.delta;
                c.conj() * (-x * x * s2 / 2.0).exp()
            })
            .collect()
    }

    /// Band `|Im z| <` cutoff containing every zero of an exact finite-support
    /// state, from Fujiwara's bound on the roots of `P` and of its reverse.
    pub fn finite_support_cutoff(&self) -> Option<f64> {
        let p = self.polynomial();
        if p.len() < 2 {
            return Some(1.0);
        }
        let fujiwara = |c: &[Complex64]| {
            let m = c.len() - 1;
            let lead = c[m].norm();
            let mut b = 0.0f64;
            for j in 1..=m {
                let mut r = c[m - j].norm() / lead;
                if j == m {
                    r /= 2.0;
                }
                b = b.max(r.powf(1.0 / j as f64));
            }
            2.0 * b
        };
        let upper = fujiwara(&p);
        let rev: Vec<Complex64> = p.iter().rev().copied().collect();
        let lower = 1.0 / fujiwara(&rev);
        if !(upper.is_finite() && lower > 0.0) {
            return None;
        }
        Some(upper.ln().abs().max(lower.ln().abs()) + 0.5)
    }
}

/// `⟨ψ|z⟩`.
pub fn bargmann_eval(f: &BargmannFunction, z: Complex64) -> Result<Complex64> {
    f.eval(z)
}

//! Coherent states on the circle and their elementary expectation values.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{CylinderRule, QuadratureSpec};
use crate::theta::{lattice_sums, TERM_BUDGET};

/// Default relative cutoff for coherent-state coefficient windows.
pub const DEFAULT_TOL: f64 = 1e-16;
/// Default maximum number of basis indices in a window.
pub const WINDOW_BUDGET: usize = 4096;

/// The representation `(δ, s, ħ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Representation {
    pub delta: f64,
    pub s: f64,
    #[serde(default = "one")]
    pub hbar: f64,
}

fn one() -> f64 {
    1.0
}

impl Representation {
    pub fn new(delta: f64, s: f64, hbar: f64) -> Result<Self> {
        let r = Representation { delta, s, hbar };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.delta) {
            return Err(Error::InvalidParameter(format!("delta must lie in [0,1), got {}", self.delta)));
        }
        if !(self.s > 0.0 && self.s.is_finite()) {
            return Err(Error::InvalidParameter(format!("s must be positive, got {}", self.s)));
        }
        if !(self.hbar > 0.0 && self.hbar.is_finite()) {
            return Err(Error::InvalidParameter(format!("hbar must be positive, got {}", self.hbar)));
        }
        Ok(())
    }

    pub fn s2(&self) -> f64 {
        self.s * self.s
    }

    /// Phase picked up by a coherent state under `z ↦ z + 2πk`.
    pub fn shift_phase(&self, k: i64) -> Complex64 {
        Complex64::from_polar(1.0, -2.0 * PI * self.delta * k as f64)
    }
}

/// A coherent-state label `z = φ + i p/ħ` with `φ` reduced to `[−π, π)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub phi: f64,
    pub p: f64,
}

impl PhasePoint {
    pub fn new(phi: f64, p: f64) -> Self {
        PhasePoint { phi: reduce_angle(phi).0, p }
    }

    /// Splits a raw label into a reduced point and the number of `2π` shifts removed.
    pub fn from_z(z: Complex64, hbar: f64) -> (Self, i64) {
        let (phi, k) = reduce_angle(z.re);
        (PhasePoint { phi, p: z.im * hbar }, k)
    }

    pub fn z(&self, hbar: f64) -> Complex64 {
        Complex64::new(self.phi, self.p / hbar)
    }

    /// Momentum at which `|z⟩` is peaked, `p/s²`.
    pub fn peak_momentum(&self, s: f64) -> f64 {
        self.p / (s * s)
    }

    pub fn from_peak(phi: f64, peak: f64, s: f64) -> Self {
        PhasePoint::new(phi, peak * s * s)
    }
}

/// Reduces an angle to `[−π, π)` and returns the number of periods removed.
pub fn reduce_angle(phi: f64) -> (f64, i64) {
    let k = ((phi + PI) / (2.0 * PI)).floor();
    let mut r = phi - 2.0 * PI * k;
    if r >= PI {
        r -= 2.0 * PI;
    }
    (r, k as i64)
}

/// Anything that can label a coherent state.
pub trait Label {
    fn label(&self, rep: &Representation) -> Complex64;
}

impl Label for Complex64 {
    fn label(&self, _: &Representation) -> Complex64 {
        *self
    }
}

impl Label for PhasePoint {
    fn label(&self, rep: &Representation) -> Complex64 {
        self.z(rep.hbar)
    }
}

impl<T: Label> Label for &T {
    fn label(&self, rep: &Representation) -> Complex64 {
        (*self).label(rep)
    }
}

/// Coefficients `⟨n_min + j | ψ⟩` over a contiguous window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateVector {
    pub n_min: i64,
    pub coeffs: Vec<Complex64>,
}

impl StateVector {
    pub fn new(n_min: i64, coeffs: Vec<Complex64>) -> Self {
        StateVector { n_min, coeffs }
    }

    pub fn basis(n: i64) -> Self {
        StateVector { n_min: n, coeffs: vec![Complex64::new(1.0, 0.0)] }
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn n_max(&self) -> i64 {
        self.n_min + self.coeffs.len() as i64 - 1
    }

    pub fn get(&self, n: i64) -> Complex64 {
        let j = n - self.n_min;
        if j < 0 || j >= self.coeffs.len() as i64 {
            Complex64::new(0.0, 0.0)
        } else {
            self.coeffs[j as usize]
        }
    }

    pub fn indexed(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        self.coeffs.iter().enumerate().map(move |(j, c)| (self.n_min + j as i64, *c))
    }

    pub fn norm_squared(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Complex64 {
        let lo = self.n_min.max(other.n_min);
        let hi = self.n_max().min(other.n_max());
        (lo..=hi).map(|n| self.get(n).conj() * other.get(n)).sum()
    }

    pub fn scaled(&self, a: Complex64) -> StateVector {
        StateVector { n_min: self.n_min, coeffs: self.coeffs.iter().map(|c| c * a).collect() }
    }

    /// `a·self + b·other` on the union window.
    pub fn combine(&self, a: Complex64, other: &StateVector, b: Complex64) -> StateVector {
        let lo = self.n_min.min(other.n_min);
        let hi = self.n_max().max(other.n_max());
        let coeffs = (lo..=hi).map(|n| a * self.get(n) + b * other.get(n)).collect();
        StateVector { n_min: lo, coeffs }
    }

    /// Removes exactly-zero coefficients at both ends.
    pub fn trimmed(&self) -> StateVector {
        let zero = Complex64::new(0.0, 0.0);
        let first = self.coeffs.iter().position(|c| *c != zero);
        match first {
            None => StateVector { n_min: self.n_min, coeffs: Vec::new() },
            Some(f) => {
                let last = self.coeffs.iter().rposition(|c| *c != zero).unwrap();
                StateVector { n_min: self.n_min + f as i64, coeffs: self.coeffs[f..=last].to_vec() }
            }
        }
    }

    fn check_nonzero(&self) -> Result<f64> {
        let n2 = self.norm_squared();
        if n2 > 0.0 && n2.is_finite() {
            Ok(n2)
        } else {
            Err(Error::ZeroNorm)
        }
    }
}

/// Index window `[lo, hi]` where `|c_n(z)| ≥ tol · max`.
pub fn coherent_window(rep: &Representation, z: Complex64, tol: f64) -> Result<(i64, i64)> {
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::InvalidParameter(format!("tol must lie in (0,1), got {tol}")));
    }
    let s2 = rep.s2();
    let centre = z.im / s2;
    let half = (2.0 * (1.0 / tol).ln()).sqrt() / rep.s;
    let lo = (centre - half - rep.delta).ceil();
    let hi = (centre + half - rep.delta).floor();
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(Error::WindowOverflow { needed: usize::MAX, budget: WINDOW_BUDGET });
    }
    let (lo, hi) = if lo > hi {
        let n = (centre - rep.delta).round();
        (n, n)
    } else {
        (lo, hi)
    };
    Ok((lo as i64, hi as i64))
}

/// `c_n(z) = exp(−(n+δ)²s²/2 − i(n+δ)z)`.
///
/// The angle is reduced first and the `2π` shifts are applied as the exact
/// phase `e^{−2πiδk}`, so shifted labels agree to rounding.
pub fn coherent_coefficient(rep: &Representation, z: Complex64, n: i64) -> Complex64 {
    let x = n as f64 + rep.delta;
    let (phi, k) = reduce_angle(z.re);
    Complex64::from_polar((-x * x * rep.s2() / 2.0 + x * z.im).exp(), -x * phi) * rep.shift_phase(k)
}

/// Coherent state `|z⟩_δ` truncated to coefficients above `tol` times the peak.
pub fn coherent_state(rep: &Representation, z: impl Label, tol: f64) -> Result<StateVector> {
    coherent_state_with_budget(rep, z, tol, WINDOW_BUDGET)
}

pub fn coherent_state_with_budget(rep: &Representation, z: impl Label, tol: f64, budget: usize) -> Result<StateVector> {
    rep.validate()?;
    let z = z.label(rep);
    let (lo, hi) = coherent_window(rep, z, tol)?;
    let needed = (hi - lo + 1) as usize;
    if needed > budget {
        return Err(Error::WindowOverflow { needed, budget });
    }
    let coeffs: Vec<Complex64> = (lo..=hi).map(|n| coherent_coefficient(rep, z, n)).collect();
    if coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
        return Err(Error::RangeOverflow);
    }
    Ok(StateVector { n_min: lo, coeffs })
}

/// Same window as [`coherent_state`] with coefficients divided by the peak modulus.
pub(crate) fn coherent_state_normalized(rep: &Representation, z: Complex64, tol: f64) -> Result<StateVector> {
    let (lo, hi) = coherent_window(rep, z, tol)?;
    let needed = (hi - lo + 1) as usize;
    if needed > WINDOW_BUDGET {
        return Err(Error::WindowOverflow { needed, budget: WINDOW_BUDGET });
    }
    let s2 = rep.s2();
    let log_mod = |n: i64| {
        let x = n as f64 + rep.delta;
        -x * x * s2 / 2.0 + x * z.im
    };
    let peak = (lo..=hi).map(log_mod).fold(f64::NEG_INFINITY, f64::max);
    let (phi, k) = reduce_angle(z.re);
    let shift = rep.shift_phase(k);
    let coeffs = (lo..=hi)
        .map(|n| {
            let x = n as f64 + rep.delta;
            Complex64::from_polar((log_mod(n) - peak).exp(), -x * phi) * shift
        })
        .collect();
    Ok(StateVector { n_min: lo, coeffs })
}

/// `⟨z|z⟩ = Σ exp(−(n+δ)²s² + 2(n+δ) Im z)`.
pub fn norm_squared(rep: &Representation, z: impl Label) -> Result<f64> {
    let z = z.label(rep);
    Ok(overlap(rep, z, z)?.re)
}

/// `⟨z_left|z_right⟩` as a lattice sum with `α = s²`, `β = i(z̄_left − z_right)`.
pub fn overlap(rep: &Representation, z_left: impl Label, z_right: impl Label) -> Result<Complex64> {
    rep.validate()?;
    let zl = z_left.label(rep);
    let zr = z_right.label(rep);
    let beta = Complex64::i() * (zl.conj() - zr);
    lattice_sums(Complex64::new(rep.s2(), 0.0), beta, rep.delta, 0, None, TERM_BUDGET)?.get(0)
}

/// `⟨z_left|z_right⟩ / (‖z_left‖ ‖z_right‖)`, computed in log-scaled form.
pub fn normalized_overlap(rep: &Representation, z_left: impl Label, z_right: impl Label) -> Result<Complex64> {
    rep.validate()?;
    let zl = z_left.label(rep);
    let zr = z_right.label(rep);
    let a = Complex64::new(rep.s2(), 0.0);
    let sum = |beta: Complex64| lattice_sums(a, beta, rep.delta, 0, None, TERM_BUDGET);
    let i = Complex64::i();
    let o = sum(i * (zl.conj() - zr))?;
    let nl = sum(i * (zl.conj() - zl))?;
    let nr = sum(i * (zr.conj() - zr))?;
    let log = o.log_scale - 0.5 * (nl.log_scale + nr.log_scale);
    Ok(o.values[0] / (nl.values[0].re * nr.values[0].re).sqrt() * log.exp())
}

/// `⟨ψ|e^{iφ̂}|ψ⟩/⟨ψ|ψ⟩ = Σ c̄_{n+1} c_n / Σ|c_n|²`.
pub fn expect_exp_iphi(_rep: &Representation, psi: &StateVector) -> Result<Complex64> {
    let n2 = psi.check_nonzero()?;
    let c = &psi.coeffs;
    let s: Complex64 = c.windows(2).map(|w| w[1].conj() * w[0]).sum();
    Ok(s / n2)
}

/// `ħ Σ (n+δ)|c_n|² / Σ|c_n|²`.
pub fn expect_p(rep: &Representation, psi: &StateVector) -> Result<f64> {
    let n2 = psi.check_nonzero()?;
    let s: f64 = psi.indexed().map(|(n, c)| (n as f64 + rep.delta) * c.norm_sqr()).sum();
    Ok(rep.hbar * s / n2)
}

/// Applies `ĝ` (or `ĝ†` when `adjoint`); the window grows by one index.
///
/// `ĝ|n⟩ = e^{s²(x² − (x+1)²)/2}|n+1⟩` with `x = n + δ`.
pub fn ladder_apply(rep: &Representation, psi: &StateVector, adjoint: bool) -> StateVector {
    let s2 = rep.s2();
    let zero = Complex64::new(0.0, 0.0);
    let mut out = vec![zero; psi.len() + 1];
    if adjoint {
        for (j, c) in psi.coeffs.iter().enumerate() {
            let x = (psi.n_min + j as i64) as f64 + rep.delta;
            out[j] = c * (s2 * ((x - 1.0).powi(2) - x * x) / 2.0).exp();
        }
        StateVector { n_min: psi.n_min - 1, coeffs: out }
    } else {
        for (j, c) in psi.coeffs.iter().enumerate() {
            let x = (psi.n_min + j as i64) as f64 + rep.delta;
            out[j + 1] = c * (s2 * (x * x - (x + 1.0).powi(2)) / 2.0).exp();
        }
        StateVector { n_min: psi.n_min, coeffs: out }
    }
}

/// Max entrywise deviation from the identity of the quadrature of
/// `(1/(√π sħ)) ∫dp ∫dφ/2π e^{−p²/(s²ħ²)} |z⟩⟨z|` on the index window `[n_lo, n_hi]`.
pub fn identity_resolution_residual(rep: &Representation, n_lo: i64, n_hi: i64, quad: QuadratureSpec) -> Result<f64> {
    rep.validate()?;
    if n_hi < n_lo {
        return Err(Error::InvalidParameter("empty index window".into()));
    }
    let rule = CylinderRule::new(quad, rep.s, rep.hbar)?;
    let dim = (n_hi - n_lo + 1) as usize;
    let s2 = rep.s2();
    let xs: Vec<f64> = (n_lo..=n_hi).map(|n| n as f64 + rep.delta).collect();
    let partial: Vec<Vec<Complex64>> = rule
        .p
        .par_iter()
        .zip(rule.p_weights.par_iter())
        .map(|(&p, &wp)| {
            let mut m = vec![Complex64::new(0.0, 0.0); dim * dim];
            let half_log_w = 0.5 * (wp * rule.phi_weight).ln();
            for &phi in &rule.phi {
                let v: Vec<Complex64> = xs
                    .iter()
                    .map(|&x| Complex64::from_polar((half_log_w - x * x * s2 / 2.0 + x * p / rep.hbar).exp(), -x * phi))
                    .collect();
                for a in 0..dim {
                    for b in 0..dim {
                        m[a * dim + b] += v[a] * v[b].conj();
                    }
                }
            }
            m
        })
        .collect();
    let mut total = vec![Complex64::new(0.0, 0.0); dim * dim];
    for m in &partial {
        for (t, x) in total.iter_mut().zip(m) {
            *t += x;
        }
    }
    let mut worst = 0.0f64;
    for a in 0..dim {
        for b in 0..dim {
            let target = if a == b { 1.0 } else { 0.0 };
            worst = worst.max((total[a * dim + b] - target).norm());
        }
    }
    Ok(worst)
}

/// `(Δ_z Q̂ · Δ_z P̂, ½|⟨[Q̂, P̂]⟩_z|)` with `Q̂ = (ĝ+ĝ†)/2`, `P̂ = (ĝ−ĝ†)/2i`.
pub fn uncertainty_product(rep: &Representation, z: impl Label) -> Result<(f64, f64)> {
    rep.validate()?;
    let z = z.label(rep);
    let psi = coherent_state_normalized(rep, z, 1e-20)?;
    uncertainty_of(rep, &psi)
}

pub fn uncertainty_of(rep: &Representation, psi: &StateVector) -> Result<(f64, f64)> {
    let n2 = psi.check_nonzero()?;
    let g = ladder_apply(rep, psi, false);
    let gd = ladder_apply(rep, psi, true);
    let half = Complex64::new(0.5, 0.0);
    let q = g.combine(half, &gd, half);
    let p = g.combine(Complex64::new(0.0, -0.5), &gd, Complex64::new(0.0, 0.5));
    let mq = psi.inner(&q) / n2;
    let mp = psi.inner(&p) / n2;
    let dq = q.combine(Complex64::new(1.0, 0.0), psi, -mq);
    let dp = p.combine(Complex64::new(1.0, 0.0), psi, -mp);
    let var_q = dq.norm_squared() / n2;
    let var_p = dp.norm_squared() / n2;
    let comm = 2.0 * q.inner(&p).im / n2;
    Ok(((var_q * var_p).sqrt(), 0.5 * comm.abs()))
}

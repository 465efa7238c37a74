//! Gaussian lattice sums `Σ_n (n+δ)^k exp(−α(n+δ)² + β(n+δ))` and the
//! Jacobi theta function built on them.
//!
//! Two routes are available: the direct sum over the lattice and its
//! Poisson dual `√(π/α) Σ_m e^{2πimδ} e^{b²/4α} E[X^k]` with
//! `b = β − 2πim` and `X ~ N(b/2α, 1/2α)`. Results are returned with an
//! explicit logarithmic scale so that ratios of huge sums stay finite.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Highest supported power of `(n+δ)`.
pub const MAX_ORDER: usize = 4;
/// Default number of terms per side before giving up.
pub const TERM_BUDGET: usize = 10_000;
const TRUNCATION: f64 = 1e-17;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    Direct,
    Dual,
}

/// Parameters of a real-α Gaussian lattice sum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussSumParams {
    pub alpha: f64,
    pub beta: Complex64,
    pub delta: f64,
}

impl GaussSumParams {
    pub fn new(alpha: f64, beta: Complex64, delta: f64) -> Result<Self> {
        let p = GaussSumParams { alpha, beta, delta };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0) || !self.alpha.is_finite() {
            return Err(Error::InvalidParameter(format!("alpha must be positive, got {}", self.alpha)));
        }
        if !(0.0..1.0).contains(&self.delta) {
            return Err(Error::InvalidParameter(format!("delta must lie in [0,1), got {}", self.delta)));
        }
        if !self.beta.re.is_finite() || !self.beta.im.is_finite() {
            return Err(Error::InvalidParameter("beta must be finite".into()));
        }
        Ok(())
    }
}

/// Sums of orders `0..=kmax`, each equal to `values[k] * exp(log_scale)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledSums {
    pub log_scale: f64,
    pub values: [Complex64; MAX_ORDER + 1],
}

impl ScaledSums {
    pub fn get(&self, k: usize) -> Result<Complex64> {
        let v = self.values[k] * self.log_scale.exp();
        if v.re.is_finite() && v.im.is_finite() {
            Ok(v)
        } else {
            Err(Error::RangeOverflow)
        }
    }
}

/// Route chosen when the caller does not force one.
///
/// Real α switches at α = 1. For complex α the route with the faster
/// Gaussian decay, `Re α` versus `π² Re(1/α)`, wins.
pub fn default_route(alpha: Complex64) -> Route {
    if alpha.im == 0.0 {
        if alpha.re >= 1.0 {
            Route::Direct
        } else {
            Route::Dual
        }
    } else if alpha.re >= PI * PI * alpha.inv().re {
        Route::Direct
    } else {
        Route::Dual
    }
}

/// Raw moments `E[X^k]`, `k = 0..=4`, of a Gaussian with the given mean and variance.
fn gaussian_moments(mu: Complex64, var: Complex64) -> [Complex64; MAX_ORDER + 1] {
    let mu2 = mu * mu;
    [Complex64::new(1.0, 0.0), mu, mu2 + var, mu2 * mu + 3.0 * mu * var, mu2 * mu2 + 6.0 * mu2 * var + 3.0 * var * var]
}

fn min_reach(kmax: usize, rate: f64) -> i64 {
    ((kmax as f64 / (2.0 * rate)).sqrt().ceil() as i64) + 1
}

struct Accumulator {
    kmax: usize,
    sum: [Complex64; MAX_ORDER + 1],
    peak: [f64; MAX_ORDER + 1],
}

impl Accumulator {
    fn new(kmax: usize) -> Self {
        Accumulator { kmax, sum: [Complex64::new(0.0, 0.0); MAX_ORDER + 1], peak: [0.0; MAX_ORDER + 1] }
    }

    /// Adds one term and reports whether it is negligible for every order.
    fn add(&mut self, t: &[Complex64; MAX_ORDER + 1]) -> bool {
        let mut small = true;
        let n = self.kmax + 1;
        for ((sum, peak), term) in self.sum[..n].iter_mut().zip(&mut self.peak[..n]).zip(&t[..n]) {
            *sum += term;
            let a = term.norm();
            if a > *peak {
                *peak = a;
            }
            if a > TRUNCATION * *peak {
                small = false;
            }
        }
        small
    }
}

fn direct(alpha: Complex64, beta: Complex64, delta: f64, kmax: usize, budget: usize) -> Result<ScaledSums> {
    let centre = (beta.re / (2.0 * alpha.re) - delta).round();
    if !centre.is_finite() || centre.abs() > 1e15 {
        return Err(Error::RangeOverflow);
    }
    let n_star = centre as i64;
    let expo = |x: f64| -alpha * x * x + beta * x;
    let log_scale = expo(n_star as f64 + delta).re;
    let term = |n: i64| {
        let x = n as f64 + delta;
        let g = (expo(x) - log_scale).exp();
        let mut t = [Complex64::new(0.0, 0.0); MAX_ORDER + 1];
        let mut xp = 1.0;
        for tk in t.iter_mut().take(kmax + 1) {
            *tk = g * xp;
            xp *= x;
        }
        t
    };
    let reach = min_reach(kmax, alpha.re);
    let mut acc = Accumulator::new(kmax);
    acc.add(&term(n_star));
    for j in 1..=budget as i64 {
        let hi = acc.add(&term(n_star + j));
        let lo = acc.add(&term(n_star - j));
        if hi && lo && j >= reach {
            let mut values = acc.sum;
            for v in values.iter_mut().skip(kmax + 1) {
                *v = Complex64::new(0.0, 0.0);
            }
            return Ok(ScaledSums { log_scale, values });
        }
    }
    Err(Error::NonConvergence { route: Route::Direct, budget })
}

fn dual(alpha: Complex64, beta: Complex64, delta: f64, kmax: usize, budget: usize) -> Result<ScaledSums> {
    let i = Complex64::i();
    let inv = alpha.inv();
    let rate = PI * PI * inv.re;
    let centre = ((-i * beta * inv).re / (2.0 * PI * inv.re)).round();
    if !centre.is_finite() || centre.abs() > 1e15 {
        return Err(Error::RangeOverflow);
    }
    let m_star = centre as i64;
    let b_of = |m: i64| beta - 2.0 * PI * i * m as f64;
    let log_scale = {
        let b = b_of(m_star);
        (b * b * inv / 4.0).re
    };
    let pref = (PI * inv).sqrt();
    let var = inv / 2.0;
    let term = |m: i64| {
        let b = b_of(m);
        let e = b * b * inv / 4.0 + 2.0 * PI * i * (m as f64) * delta;
        let g = pref * (e - log_scale).exp();
        let mom = gaussian_moments(b * inv / 2.0, var);
        let mut t = [Complex64::new(0.0, 0.0); MAX_ORDER + 1];
        for k in 0..=kmax {
            t[k] = g * mom[k];
        }
        t
    };
    let reach = min_reach(kmax, rate);
    let mut acc = Accumulator::new(kmax);
    acc.add(&term(m_star));
    for j in 1..=budget as i64 {
        let hi = acc.add(&term(m_star + j));
        let lo = acc.add(&term(m_star - j));
        if hi && lo && j >= reach {
            return Ok(ScaledSums { log_scale, values: acc.sum });
        }
    }
    Err(Error::NonConvergence { route: Route::Dual, budget })
}

/// All orders `0..=kmax` of the lattice sum for complex α with `Re α > 0`.
pub fn lattice_sums(
    alpha: Complex64,
    beta: Complex64,
    delta: f64,
    kmax: usize,
    route: Option<Route>,
    budget: usize,
) -> Result<ScaledSums> {
    if !(alpha.re > 0.0) || !alpha.im.is_finite() {
        return Err(Error::NonConvergence { route: route.unwrap_or(Route::Direct), budget: 0 });
    }
    if kmax > MAX_ORDER {
        return Err(Error::InvalidParameter(format!("derivative order {kmax} exceeds {MAX_ORDER}")));
    }
    match route.unwrap_or_else(|| default_route(alpha)) {
        Route::Direct => direct(alpha, beta, delta, kmax, budget),
        Route::Dual => dual(alpha, beta, delta, kmax, budget),
    }
}

/// `Σ_n (n+δ)^k exp(−α(n+δ)² + β(n+δ))` using the default route.
pub fn gauss_lattice_sum(params: GaussSumParams, deriv_order: usize) -> Result<Complex64> {
    params.validate()?;
    let alpha = Complex64::new(params.alpha, 0.0);
    lattice_sums(alpha, params.beta, params.delta, deriv_order, None, TERM_BUDGET)?.get(deriv_order)
}

/// Same as [`gauss_lattice_sum`] with an explicit route and term budget.
pub fn gauss_lattice_sum_via(
    params: GaussSumParams,
    deriv_order: usize,
    route: Route,
    budget: usize,
) -> Result<Complex64> {
    params.validate()?;
    let alpha = Complex64::new(params.alpha, 0.0);
    lattice_sums(alpha, params.beta, params.delta, deriv_order, Some(route), budget)?.get(deriv_order)
}

/// Jacobi theta function `ϑ₃(w, τ) = Σ_n exp(πin²τ + 2πinw)`.
pub fn theta3(w: Complex64, tau: Complex64) -> Result<Complex64> {
    if !(tau.im > 0.0) {
        return Err(Error::NonConvergence { route: Route::Direct, budget: 0 });
    }
    let i = Complex64::i();
    let alpha = -i * PI * tau;
    let beta = 2.0 * PI * i * w;
    lattice_sums(alpha, beta, 0.0, 0, None, TERM_BUDGET)?.get(0)
}

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::hamiltonian::HolomorphicHamiltonian;
use super::propagator::{semiclassical_propagator, PropagatorOptions};
use crate::error::{Error, Result};
use crate::quadrature::{CylinderRule, QuadratureSpec};
use crate::states::{coherent_window, reduce_angle, Representation, StateVector, WINDOW_BUDGET};

/// Largest edge coefficient accepted, relative to the peak.
const EDGE_RATIO: f64 = 1e-14;
/// Extra indices added around the coherent windows when the potential couples them.
const COUPLING_MARGIN: i64 = 12;
/// Largest number of node pairs for the semiclassical angle kernel.
const PAIR_BUDGET: usize = 1 << 16;

/// `Ĥ` diagonalized on the index window `[lo, hi]`.
#[derive(Debug, Clone)]
pub struct SpectralOracle {
    pub rep: Representation,
    pub lo: i64,
    pub hi: i64,
    pub energies: Vec<f64>,
    /// Eigenvectors as columns; `None` when `Ĥ` is already diagonal.
    vectors: Option<DMatrix<f64>>,
}

impl SpectralOracle {
    pub fn new(h: &HolomorphicHamiltonian, rep: &Representation, lo: i64, hi: i64) -> Result<Self> {
        rep.validate()?;
        h.validate()?;
        if hi < lo {
            return Err(Error::InvalidParameter("empty index window".into()));
        }
        let dim = (hi - lo + 1) as usize;
        if dim > WINDOW_BUDGET {
            return Err(Error::WindowOverflow { needed: dim, budget: WINDOW_BUDGET });
        }
        let diag: Vec<f64> = (lo..=hi).map(|n| h.diagonal(rep, n)).collect();
        if h.coupling() == 0.0 {
            return Ok(SpectralOracle { rep: *rep, lo, hi, energies: diag, vectors: None });
        }
        let off = h.off_diagonal();
        let m = DMatrix::from_fn(dim, dim, |i, j| {
            if i == j {
                diag[i]
            } else if i + 1 == j || j + 1 == i {
                off
            } else {
                0.0
            }
        });
        let eig = SymmetricEigen::new(m);
        Ok(SpectralOracle {
            rep: *rep,
            lo,
            hi,
            energies: eig.eigenvalues.iter().copied().collect(),
            vectors: Some(eig.eigenvectors),
        })
    }

    pub fn dim(&self) -> usize {
        (self.hi - self.lo + 1) as usize
    }

    fn window_of(&self, psi: &StateVector) -> Vec<Complex64> {
        (self.lo..=self.hi).map(|n| psi.get(n)).collect()
    }

    /// `e^{−iĤτ/ħ}ψ` restricted to the window.
    pub fn propagate(&self, psi: &StateVector, tau: f64) -> StateVector {
        let c = self.window_of(psi);
        let phase = |e: f64| Complex64::from_polar(1.0, -e * tau / self.rep.hbar);
        let out = match &self.vectors {
            None => c.iter().zip(&self.energies).map(|(c, e)| c * phase(*e)).collect(),
            Some(v) => {
                let dim = self.dim();
                let mut proj = vec![Complex64::new(0.0, 0.0); dim];
                for (k, p) in proj.iter_mut().enumerate() {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (j, cj) in c.iter().enumerate() {
                        acc += cj * v[(j, k)];
                    }
                    *p = acc * phase(self.energies[k]);
                }
                (0..dim).map(|j| proj.iter().enumerate().map(|(k, p)| p * v[(j, k)]).sum()).collect()
            }
        };
        StateVector::new(self.lo, out)
    }

    /// `Σ_{m,m'} conj(a_m) U_{mm'} b_{m'}` with `U = e^{−iĤτ/ħ}`.
    pub fn matrix_element(&self, a: &[Complex64], b: &[Complex64], tau: f64) -> Complex64 {
        let psi = self.propagate(&StateVector::new(self.lo, b.to_vec()), tau);
        a.iter().zip(&psi.coeffs).map(|(x, y)| x.conj() * y).sum()
    }
}

/// Coefficients `c_n(z)` on `[lo, hi]` divided by `e^{peak}`, with `peak` returned.
fn scaled_coefficients(rep: &Representation, z: Complex64, lo: i64, hi: i64) -> (Vec<Complex64>, f64) {
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
    (coeffs, peak)
}

fn edge_ratio(c: &[Complex64]) -> f64 {
    let max = c.iter().map(|c| c.norm()).fold(0.0, f64::max);
    c[0].norm().max(c[c.len() - 1].norm()) / max
}

/// Index window covering both coherent states with the edge criterion met.
pub fn default_window(
    h: &HolomorphicHamiltonian,
    rep: &Representation,
    z_i: Complex64,
    z_f: Complex64,
) -> Result<(i64, i64)> {
    let (a, b) = coherent_window(rep, z_i, 1e-17)?;
    let (c, d) = coherent_window(rep, z_f, 1e-17)?;
    let margin = if h.coupling() == 0.0 { 1 } else { COUPLING_MARGIN };
    Ok((a.min(c) - margin, b.max(d) + margin))
}

/// Exact `⟨z_F|e^{−iĤτ/ħ}|z_I⟩` by diagonalization on an index window.
pub fn exact_propagator_spectral(
    h: &HolomorphicHamiltonian,
    rep: &Representation,
    z_i: Complex64,
    z_f: Complex64,
    tau: f64,
    window: Option<(i64, i64)>,
) -> Result<Complex64> {
    let (lo, hi) = match window {
        Some(w) => w,
        None => default_window(h, rep, z_i, z_f)?,
    };
    let oracle = SpectralOracle::new(h, rep, lo, hi)?;
    let (ci, pi) = scaled_coefficients(rep, z_i, lo, hi);
    let (cf, pf) = scaled_coefficients(rep, z_f, lo, hi);
    let ratio = edge_ratio(&ci).max(edge_ratio(&cf));
    if ratio > EDGE_RATIO {
        return Err(Error::WindowTooSmall { ratio });
    }
    let k = oracle.matrix_element(&cf, &ci, tau) * (pi + pf).exp();
    if !(k.re.is_finite() && k.im.is_finite()) {
        return Err(Error::RangeOverflow);
    }
    Ok(k)
}

/// Which propagator the angle quadrature convolves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AngleKernel {
    Spectral,
    Semiclassical(PropagatorOptions),
}

/// `Σ_{m,m'} e^{i x_m φ_F} U_{mm'} e^{−i x_{m'} φ_I}` on the window.
pub fn direct_angle_sum(
    h: &HolomorphicHamiltonian,
    rep: &Representation,
    phi_i: f64,
    phi_f: f64,
    tau: f64,
    window: (i64, i64),
) -> Result<Complex64> {
    let oracle = SpectralOracle::new(h, rep, window.0, window.1)?;
    let plane = |phi: f64| -> Vec<Complex64> {
        (window.0..=window.1).map(|n| Complex64::from_polar(1.0, -(n as f64 + rep.delta) * phi)).collect()
    };
    Ok(oracle.matrix_element(&plane(phi_f), &plane(phi_i), tau))
}

/// `⟨φ_F|e^{−iĤτ/ħ}|φ_I⟩` with `⟨φ|n⟩ = e^{i(n+δ)φ}` on the window, by inserting
/// the coherent-state resolution of the identity on both sides.
#[allow(clippy::too_many_arguments)]
pub fn angle_propagator(
    h: &HolomorphicHamiltonian,
    rep: &Representation,
    phi_i: f64,
    phi_f: f64,
    tau: f64,
    quad: QuadratureSpec,
    window: (i64, i64),
    kernel: &AngleKernel,
) -> Result<Complex64> {
    let rule = CylinderRule::new(quad, rep.s, rep.hbar)?;
    let (lo, hi) = window;
    if hi < lo {
        return Err(Error::InvalidParameter("empty index window".into()));
    }
    let nodes: Vec<(Complex64, f64)> = rule
        .p
        .iter()
        .zip(&rule.p_weights)
        .flat_map(|(p, wp)| rule.phi.iter().map(move |phi| (Complex64::new(*phi, p / rep.hbar), wp * rule.phi_weight)))
        .collect();
    let coeffs = |z: Complex64| -> Vec<Complex64> {
        (lo..=hi)
            .map(|n| {
                let x = n as f64 + rep.delta;
                Complex64::from_polar((-x * x * rep.s2() / 2.0 + x * z.im).exp(), -x * z.re)
            })
            .collect()
    };
    // ⟨φ|z⟩ = Σ_n e^{ixφ} c_n(z)
    let bra = |phi: f64, c: &[Complex64]| -> Complex64 {
        c.iter()
            .enumerate()
            .map(|(j, c)| Complex64::from_polar(1.0, (lo + j as i64) as f64 * phi + rep.delta * phi) * c)
            .sum()
    };
    match kernel {
        AngleKernel::Spectral => {
            let oracle = SpectralOracle::new(h, rep, lo, hi)?;
            let dim = oracle.dim();
            let parts: Vec<(Vec<Complex64>, Vec<Complex64>)> = nodes
                .par_iter()
                .map(|(z, w)| {
                    let c = coeffs(*z);
                    let left = bra(phi_f, &c) * *w;
                    let right = bra(phi_i, &c).conj() * *w;
                    let a: Vec<Complex64> = c.iter().map(|cm| left * cm.conj()).collect();
                    let b: Vec<Complex64> = c.iter().map(|cm| right * cm).collect();
                    (a, b)
                })
                .collect();
            let mut a = vec![Complex64::new(0.0, 0.0); dim];
            let mut b = vec![Complex64::new(0.0, 0.0); dim];
            for (pa, pb) in &parts {
                for j in 0..dim {
                    a[j] += pa[j];
                    b[j] += pb[j];
                }
            }
            let a_conj: Vec<Complex64> = a.iter().map(|x| x.conj()).collect();
            Ok(oracle.matrix_element(&a_conj, &b, tau))
        }
        AngleKernel::Semiclassical(opts) => {
            let pairs = nodes.len() * nodes.len();
            if pairs > PAIR_BUDGET {
                return Err(Error::QuadratureBudget { requested: pairs, budget: PAIR_BUDGET });
            }
            let weights: Vec<(Complex64, Complex64, Complex64)> = nodes
                .iter()
                .map(|(z, w)| {
                    let c = coeffs(*z);
                    (*z, bra(phi_f, &c) * *w, bra(phi_i, &c).conj() * *w)
                })
                .collect();
            let terms: Vec<Result<Complex64>> = weights
                .par_iter()
                .map(|(zf, left, _)| {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (zi, _, right) in &weights {
                        let k = semiclassical_propagator(h, rep, *zi, *zf, tau, opts)?.value;
                        acc += left * k * right;
                    }
                    Ok(acc)
                })
                .collect();
            let mut total = Complex64::new(0.0, 0.0);
            for t in terms {
                total += t?;
            }
            Ok(total)
        }
    }
}

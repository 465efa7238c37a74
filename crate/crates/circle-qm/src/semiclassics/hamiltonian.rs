use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::states::Representation;
use crate::theta::{lattice_sums, ScaledSums, TERM_BUDGET};

/// Smallest `|⟨w̄|z⟩|` accepted, relative to the dominant term.
const DENOMINATOR_FLOOR: f64 = 1e-280;

/// `Ĥ = p̂²/2 − k_pend cos φ̂`; the free rotor has no potential.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HolomorphicHamiltonian {
    FreeRotor,
    Pendulum { k_pend: f64 },
}

impl HolomorphicHamiltonian {
    pub fn coupling(&self) -> f64 {
        match self {
            HolomorphicHamiltonian::FreeRotor => 0.0,
            HolomorphicHamiltonian::Pendulum { k_pend } => *k_pend,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.coupling().is_finite() {
            return Err(Error::InvalidParameter("k_pend must be finite".into()));
        }
        Ok(())
    }

    /// `⟨n|Ĥ|n⟩ = (n+δ)²ħ²/2`.
    pub fn diagonal(&self, rep: &Representation, n: i64) -> f64 {
        let x = n as f64 + rep.delta;
        0.5 * x * x * rep.hbar * rep.hbar
    }

    /// `⟨n±1|Ĥ|n⟩ = −k_pend/2`.
    pub fn off_diagonal(&self) -> f64 {
        -0.5 * self.coupling()
    }
}

/// `ℋ(w,z)` with its first and second partial derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HPartials {
    pub value: Complex64,
    pub d1: Complex64,
    pub d2: Complex64,
    pub d11: Complex64,
    pub d22: Complex64,
    pub d12: Complex64,
}

fn sums(rep: &Representation, d: Complex64, delta: f64, kmax: usize) -> Result<ScaledSums> {
    let alpha = Complex64::new(rep.s2(), 0.0);
    lattice_sums(alpha, Complex64::i() * d, delta, kmax, None, TERM_BUDGET)
}

/// `ℋ(w,z) = ⟨w̄|Ĥ|z⟩/⟨w̄|z⟩` and its partials, from lattice sums in `D = w − z`.
///
/// With `G_k(D) = Σ x^k e^{−s²x² + ixD}` the kinetic part is `(ħ²/2) G₂/G₀`
/// and the potential is `−k e^{−s²/4} cos((w+z)/2) G̃₀/G₀`, where `G̃` runs over
/// the half-shifted lattice.
pub fn h_partials(h: &HolomorphicHamiltonian, w: Complex64, z: Complex64, rep: &Representation) -> Result<HPartials> {
    let d = w - z;
    let g = sums(rep, d, rep.delta, 4)?;
    let g0 = g.values[0];
    let ln_g0 = g0.norm().ln() + g.log_scale;
    let ln_dominant = d.im * d.im / (4.0 * rep.s2());
    if g0.norm() == 0.0 || ln_g0 - ln_dominant < DENOMINATOR_FLOOR.ln() {
        return Err(Error::NearZeroDenominator { w, z });
    }
    let i = Complex64::i();
    let r: Vec<Complex64> = g.values.iter().map(|v| v / g0).collect();
    let hb = 0.5 * rep.hbar * rep.hbar;
    let k0 = hb * r[2];
    let k1 = hb * i * (r[3] - r[2] * r[1]);
    let k2 = -hb * (r[4] - 2.0 * r[3] * r[1] - r[2] * r[2] + 2.0 * r[2] * r[1] * r[1]);
    let mut out = HPartials { value: k0, d1: k1, d2: -k1, d11: k2, d22: k2, d12: -k2 };

    let k = h.coupling();
    if k != 0.0 {
        let shifted = (rep.delta + 0.5) % 1.0;
        let gs = sums(rep, d, shifted, 2)?;
        let scale = (gs.log_scale - g.log_scale).exp();
        let n: Vec<Complex64> = gs.values.iter().take(3).map(|v| v / g0 * scale).collect();
        let b0 = n[0];
        let b1 = i * (n[1] - n[0] * r[1]);
        let b2 = -(n[2] - 2.0 * n[1] * r[1] + 2.0 * n[0] * r[1] * r[1] - n[0] * r[2]);
        let pre = -k * (-rep.s2() / 4.0).exp();
        let sigma = 0.5 * (w + z);
        let (c, sn) = (sigma.cos(), sigma.sin());
        out.value += pre * c * b0;
        out.d1 += pre * (-0.5 * sn * b0 + c * b1);
        out.d2 += pre * (-0.5 * sn * b0 - c * b1);
        out.d11 += pre * (-0.25 * c * b0 - sn * b1 + c * b2);
        out.d22 += pre * (-0.25 * c * b0 + sn * b1 + c * b2);
        out.d12 += pre * (-0.25 * c * b0 - c * b2);
    }
    for v in [out.value, out.d1, out.d2, out.d11, out.d22, out.d12] {
        if !(v.re.is_finite() && v.im.is_finite()) {
            return Err(Error::RangeOverflow);
        }
    }
    Ok(out)
}

/// `ℋ(w,z) = ⟨w̄|Ĥ|z⟩/⟨w̄|z⟩`.
pub fn h_matrix_element(
    h: &HolomorphicHamiltonian,
    w: Complex64,
    z: Complex64,
    rep: &Representation,
) -> Result<Complex64> {
    Ok(h_partials(h, w, z, rep)?.value)
}

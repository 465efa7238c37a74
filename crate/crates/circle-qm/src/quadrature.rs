//! Quadrature rules used for phase-space integrals.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest Gauss–Hermite order accepted.
pub const MAX_ORDER: usize = 512;

/// Gauss–Hermite nodes and weights for `∫ f(t) e^{−t²} dt`, ascending in `t`.
///
/// Eigenvalues of the Jacobi matrix seed a Newton refinement on the
/// orthonormal recurrence, whose derivative then gives weights that stay
/// relatively accurate even in the far tails.
pub fn gauss_hermite(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if n == 0 {
        return Err(Error::InvalidParameter("quadrature order must be positive".into()));
    }
    if n > MAX_ORDER {
        return Err(Error::QuadratureBudget { requested: n, budget: MAX_ORDER });
    }
    let jacobi =
        DMatrix::from_fn(n, n, |i, j| if i + 1 == j || j + 1 == i { (i.max(j) as f64 / 2.0).sqrt() } else { 0.0 });
    let mut seeds: Vec<f64> = SymmetricEigen::new(jacobi).eigenvalues.iter().copied().collect();
    seeds.sort_by(|a, b| a.total_cmp(b));
    let pim4 = PI.powf(-0.25);
    let nf = n as f64;
    let eval = |z: f64| {
        let mut p1 = pim4;
        let mut p2 = 0.0;
        for j in 0..n {
            let p3 = p2;
            p2 = p1;
            let jf = j as f64;
            p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
        }
        (p1, (2.0 * nf).sqrt() * p2)
    };
    let m = n.div_ceil(2);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..m {
        // upper half, mirrored below
        let mut z = seeds[n - 1 - i].abs();
        if n % 2 == 1 && i == m - 1 {
            z = 0.0;
        }
        let mut pp = eval(z).1;
        for _ in 0..20 {
            let (p1, d) = eval(z);
            pp = d;
            let step = p1 / d;
            z -= step;
            if step.abs() <= 1e-15 * z.abs().max(1.0) {
                pp = eval(z).1;
                break;
            }
        }
        let w = 2.0 / (pp * pp);
        nodes[n - 1 - i] = z;
        weights[n - 1 - i] = w;
        nodes[i] = -z;
        weights[i] = w;
    }
    Ok((nodes, weights))
}

/// Product rule on the cylinder: Gauss–Hermite in `p`, periodic trapezoid in `φ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureSpec {
    pub p_order: usize,
    pub phi_order: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec { p_order: 128, phi_order: 128 }
    }
}

/// Nodes `(φ_j, p_i)` with weights of the measure
/// `(1/(√π s ħ)) e^{−p²/(s²ħ²)} dp dφ/2π`, which has total mass 1.
#[derive(Debug, Clone)]
pub struct CylinderRule {
    pub phi: Vec<f64>,
    pub p: Vec<f64>,
    pub phi_weight: f64,
    pub p_weights: Vec<f64>,
}

impl CylinderRule {
    pub fn new(spec: QuadratureSpec, s: f64, hbar: f64) -> Result<Self> {
        if spec.phi_order == 0 {
            return Err(Error::InvalidParameter("phi order must be positive".into()));
        }
        if spec.phi_order > 1 << 16 {
            return Err(Error::QuadratureBudget { requested: spec.phi_order, budget: 1 << 16 });
        }
        let (t, wt) = gauss_hermite(spec.p_order)?;
        let norm = PI.sqrt().recip();
        let p = t.iter().map(|t| s * hbar * t).collect();
        let p_weights = wt.iter().map(|w| w * norm).collect();
        let nphi = spec.phi_order;
        let phi = (0..nphi).map(|j| -PI + 2.0 * PI * j as f64 / nphi as f64).collect();
        Ok(CylinderRule { phi, p, phi_weight: 1.0 / nphi as f64, p_weights })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn low_orders_match_closed_forms() {
        let (x, w) = gauss_hermite(1).unwrap();
        assert!(x[0].abs() < 1e-15 && (w[0] - PI.sqrt()).abs() < 1e-14);
        let (x, w) = gauss_hermite(2).unwrap();
        assert!((x[1] - 0.5f64.sqrt()).abs() < 1e-14);
        assert!((w[0] - PI.sqrt() / 2.0).abs() < 1e-14);
        let (x, w) = gauss_hermite(3).unwrap();
        assert!((x[2] - 1.5f64.sqrt()).abs() < 1e-14);
        assert!((w[1] - 2.0 * PI.sqrt() / 3.0).abs() < 1e-14);
    }

    #[test]
    fn moments_are_exact() {
        // ∫ t^{2k} e^{−t²} = Γ(k+1/2)
        for n in [8usize, 33, 64, 128, 200] {
            let (x, w) = gauss_hermite(n).unwrap();
            let mut gamma = PI.sqrt();
            for k in 0..6 {
                let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(2 * k)).sum();
                assert!((q - gamma).abs() < 1e-12 * gamma, "n={n} k={k}");
                gamma *= k as f64 + 0.5;
            }
        }
    }

    #[test]
    fn shifted_gaussian_is_integrated() {
        // ∫ e^{−t² + 2at} dt = √π e^{a²}
        let (x, w) = gauss_hermite(128).unwrap();
        for a in [0.5f64, 3.0, 6.0] {
            let q: f64 = x.iter().zip(&w).map(|(x, w)| w * (2.0 * a * x).exp()).sum();
            let exact = PI.sqrt() * (a * a).exp();
            assert!((q - exact).abs() < 1e-12 * exact, "a={a}");
        }
    }

    #[test]
    fn budget_is_enforced() {
        assert!(matches!(gauss_hermite(MAX_ORDER + 1), Err(Error::QuadratureBudget { .. })));
        assert!(gauss_hermite(0).is_err());
    }
}

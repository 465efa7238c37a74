use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::bargmann::BargmannFunction;
use crate::error::{Error, Result};

/// Uniform grid on the cylinder: `φ ∈ [−π, π)` and `p ∈ [p_min, p_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CylinderGrid {
    pub phi_count: usize,
    pub p_min: f64,
    pub p_max: f64,
    pub p_count: usize,
}

impl CylinderGrid {
    pub fn validate(&self) -> Result<()> {
        if self.phi_count == 0 || self.p_count == 0 {
            return Err(Error::InvalidParameter("grid must be nonempty".into()));
        }
        if !(self.p_max >= self.p_min) || (self.p_count > 1 && self.p_max == self.p_min) {
            return Err(Error::InvalidParameter("need p_min < p_max".into()));
        }
        Ok(())
    }

    pub fn phi(&self, j: usize) -> f64 {
        -PI + 2.0 * PI * j as f64 / self.phi_count as f64
    }

    pub fn p(&self, i: usize) -> f64 {
        if self.p_count == 1 {
            self.p_min
        } else {
            self.p_min + (self.p_max - self.p_min) * i as f64 / (self.p_count - 1) as f64
        }
    }

    fn p_weight(&self, i: usize) -> f64 {
        if self.p_count == 1 {
            return 1.0;
        }
        let h = (self.p_max - self.p_min) / (self.p_count - 1) as f64;
        if i == 0 || i + 1 == self.p_count {
            h / 2.0
        } else {
            h
        }
    }
}

/// Husimi density sampled on a grid, stored with `φ` as the outer index.
#[derive(Debug, Clone, PartialEq)]
pub struct HusimiField {
    pub grid: CylinderGrid,
    pub values: Vec<f64>,
}

impl HusimiField {
    pub fn at(&self, j_phi: usize, i_p: usize) -> f64 {
        self.values[j_phi * self.grid.p_count + i_p]
    }

    /// `Σ field · Δp · Δφ/2π` with the trapezoid rule in `p`.
    pub fn mass(&self) -> f64 {
        let g = &self.grid;
        let mut total = 0.0;
        for j in 0..g.phi_count {
            for i in 0..g.p_count {
                total += self.at(j, i) * g.p_weight(i);
            }
        }
        total / g.phi_count as f64
    }

    /// Grid node with the largest value, as `(φ, p)`.
    pub fn argmax(&self) -> (f64, f64) {
        let (k, _) =
            self.values
                .iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |best, (k, v)| if *v > best.1 { (k, *v) } else { best });
        let g = &self.grid;
        (g.phi(k / g.p_count), g.p(k % g.p_count))
    }
}

/// `e^{−p²/(s²ħ²)} |ψ(φ + ip/ħ)|² / (√π s ħ ⟨ψ|ψ⟩)` on every grid node.
pub fn husimi_field(f: &BargmannFunction, grid: CylinderGrid) -> Result<HusimiField> {
    grid.validate()?;
    let rep = f.rep;
    let norm2 = f.psi.norm_squared();
    if !(norm2 > 0.0) {
        return Err(Error::ZeroNorm);
    }
    let log_norm = (PI.sqrt() * rep.s * rep.hbar).ln() + norm2.ln();
    for i in 0..grid.p_count {
        f.check_band(grid.p(i) / rep.hbar)?;
    }
    let rows: Vec<Vec<f64>> = (0..grid.phi_count)
        .into_par_iter()
        .map(|j| {
            let phi = grid.phi(j);
            (0..grid.p_count)
                .map(|i| {
                    let p = grid.p(i);
                    let sv = f.eval_scaled_unchecked(Complex64::new(phi, p / rep.hbar));
                    let ln = -p * p / (rep.s2() * rep.hbar * rep.hbar) + 2.0 * sv.ln_abs() - log_norm;
                    ln.exp()
                })
                .collect()
        })
        .collect();
    Ok(HusimiField { grid, values: rows.into_iter().flatten().collect() })
}

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::hamiltonian::HolomorphicHamiltonian;
use super::trajectory::{default_seeds, solve_complex_bvp, stability_x, BvpOptions, ComplexTrajectory};
use crate::error::{Error, Result};
use crate::states::Representation;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PropagatorOptions {
    pub bvp: BvpOptions,
    /// Largest `|n − n₀|` visited, where `n₀` is the nearest winding.
    pub winding_budget: i64,
    /// Relative size below which further windings are dropped.
    pub winding_cutoff: f64,
    pub ring_seeds: usize,
    /// Ring radius in units of `s`.
    pub ring_radius: f64,
    /// Drop branches whose solve fails instead of failing the whole call.
    pub skip_failed: bool,
    /// Run the Riccati integration on every branch.
    pub check_caustics: bool,
}

impl Default for PropagatorOptions {
    fn default() -> Self {
        PropagatorOptions {
            bvp: BvpOptions::default(),
            winding_budget: 64,
            winding_cutoff: 1e-12,
            ring_seeds: 8,
            ring_radius: 0.5,
            skip_failed: false,
            check_caustics: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub winding_n: i64,
    pub nu: usize,
    pub contribution: Complex64,
    pub trajectory: ComplexTrajectory,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct TruncationReport {
    pub included: Vec<i64>,
    /// Bound on the largest skipped winding contribution.
    pub smallest_dropped: f64,
    /// Windings whose solve failed and were skipped.
    pub failed: Vec<i64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct SolverStats {
    pub seeds_tried: usize,
    pub branches: usize,
    pub newton_iterations: usize,
    pub max_steps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropagatorResult {
    pub value: Complex64,
    pub branches: Vec<Branch>,
    pub truncation_report: TruncationReport,
    pub stats: SolverStats,
}

/// Free-particle coherent-state propagator on the real line,
/// `√(π/σ) exp(−(z̄_F − z_I)²/(4σ))` with `σ = s² + iħτ/2`.
pub fn free_particle_line(rep: &Representation, z_i: Complex64, z_f: Complex64, tau: f64) -> Complex64 {
    let sigma = Complex64::new(rep.s2(), 0.5 * rep.hbar * tau);
    let d = z_f.conj() - z_i;
    (PI / sigma).sqrt() * (-d * d / (4.0 * sigma)).exp()
}

/// Contribution of one trajectory:
/// `e^{2πinδ} √(π/s²) (δv′/δv″)^{1/2} e^{s²(i/ħ)∫∂₁∂₂ℋ} e^{(i/ħ)S − (z_I² + v″²)/(4s²)}`.
pub fn branch_contribution(rep: &Representation, traj: &ComplexTrajectory) -> Complex64 {
    let z_i = traj.u[0];
    let v_end = *traj.v.last().expect("trajectory is nonempty");
    let i = Complex64::i();
    let expo = i * TAU * traj.winding_n as f64 * rep.delta + traj.cross_term + i * traj.action / rep.hbar
        - (z_i * z_i + v_end * v_end) / (4.0 * rep.s2());
    (PI / rep.s2()).sqrt() * traj.prefactor_ratio * expo.exp()
}

/// Branches of winding `n` within the principal region `|Re(v(0) − z_I)| < π`.
#[allow(clippy::too_many_arguments)]
fn winding_branches(
    h: &HolomorphicHamiltonian,
    rep: &Representation,
    z_i: Complex64,
    z_f: Complex64,
    tau: f64,
    n: i64,
    opts: &PropagatorOptions,
    stats: &mut SolverStats,
) -> Result<Vec<Branch>> {
    let target = z_f.conj() - TAU * n as f64;
    let seeds = default_seeds(rep, z_i, target, tau, opts.ring_seeds, opts.ring_radius);
    stats.seeds_tried += seeds.len();
    let trajs = solve_complex_bvp(h, rep, z_i, z_f, n, tau, &seeds, &opts.bvp).map_err(|e| match e {
        Error::BvpNoConvergence { .. } => Error::BvpNoConvergence { winding: n },
        e => e,
    })?;
    let mut out = Vec::new();
    for mut t in trajs {
        if (t.v_start() - z_i).re.abs() >= PI {
            continue;
        }
        if opts.check_caustics {
            t.x = stability_x(&t, h, rep)?;
        }
        t.nu = out.len();
        stats.newton_iterations += t.newton_iterations;
        stats.max_steps = stats.max_steps.max(t.steps);
        out.push(Branch { winding_n: n, nu: t.nu, contribution: branch_contribution(rep, &t), trajectory: t });
    }
    if out.is_empty() {
        return Err(Error::BvpNoConvergence { winding: n });
    }
    Ok(out)
}

/// Semiclassical `⟨z_F|e^{−iĤτ/ħ}|z_I⟩` summed over windings and branches.
///
/// Windings are visited outward from the one closest to `z̄_F − z_I`. A side
/// stops once the free-particle magnitude of the next winding falls below
/// `winding_cutoff` times the largest contribution seen.
pub fn semiclassical_propagator(
    h: &HolomorphicHamiltonian,
    rep: &Representation,
    z_i: Complex64,
    z_f: Complex64,
    tau: f64,
    opts: &PropagatorOptions,
) -> Result<PropagatorResult> {
    rep.validate()?;
    h.validate()?;
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::InvalidParameter(format!("tau must be positive, got {tau}")));
    }
    let n0 = ((z_f.conj() - z_i).re / TAU).round() as i64;
    let estimate = |n: i64| free_particle_line(rep, z_i, z_f - TAU * n as f64, tau).norm();
    let mut stats = SolverStats::default();
    let mut report = TruncationReport::default();
    let mut branches: Vec<Branch> = Vec::new();
    let mut peak = 0.0f64;

    let mut visit = |n: i64, branches: &mut Vec<Branch>, report: &mut TruncationReport, peak: &mut f64| -> Result<()> {
        match winding_branches(h, rep, z_i, z_f, tau, n, opts, &mut stats) {
            Ok(bs) => {
                for b in &bs {
                    *peak = peak.max(b.contribution.norm());
                }
                report.included.push(n);
                branches.extend(bs);
                Ok(())
            }
            Err(e) if opts.skip_failed => {
                report.failed.push(n);
                report.smallest_dropped = report.smallest_dropped.max(estimate(n));
                let _ = e;
                Ok(())
            }
            Err(e) => Err(e),
        }
    };

    visit(n0, &mut branches, &mut report, &mut peak)?;
    peak = peak.max(estimate(n0));
    for dir in [1i64, -1] {
        let mut k = 1;
        loop {
            let n = n0 + dir * k;
            let bound = estimate(n);
            if bound < opts.winding_cutoff * peak {
                report.smallest_dropped = report.smallest_dropped.max(bound);
                break;
            }
            if k > opts.winding_budget {
                return Err(Error::InvalidParameter(format!(
                    "winding budget {} exhausted before the sum converged",
                    opts.winding_budget
                )));
            }
            visit(n, &mut branches, &mut report, &mut peak)?;
            k += 1;
        }
    }
    branches.sort_by_key(|b| (b.winding_n, b.nu));
    report.included.sort_unstable();
    stats.branches = branches.len();
    let value = branches.iter().map(|b| b.contribution).sum();
    Ok(PropagatorResult { value, branches, truncation_report: report, stats })
}
